#include "tvlap/simcli.hpp"

int main(int argc, char** argv) { return tvlap::cli::run_cli(argc, argv); }
