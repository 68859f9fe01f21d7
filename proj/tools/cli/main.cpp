#include "cli/commands.hpp"

int main(int argc, char** argv) { return fdemle::cli::run_cli(argc, argv); }
