#pragma once

#include "qamle/domain.hpp"
#include "qamle/extension.hpp"
#include "qamle/fields.hpp"
#include "qamle/functionals.hpp"
#include "qamle/io.hpp"
#include "qamle/oracles.hpp"
#include "qamle/refine.hpp"
#include "qamle/version.hpp"
