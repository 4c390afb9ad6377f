#include "realstrata/cli.hpp"

int main(int argc, char** argv) { return realstrata::cli::run_cli(argc, argv); }
