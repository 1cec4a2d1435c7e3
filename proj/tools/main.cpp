#include "fcl/cli.hpp"

int main(int argc, char** argv) { return fcl::cli_run(argc, argv); }
