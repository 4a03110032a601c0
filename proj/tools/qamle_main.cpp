#include "qamle/cli.hpp"

int main(int argc, char** argv) { return qamle::run_cli(argc, argv); }
