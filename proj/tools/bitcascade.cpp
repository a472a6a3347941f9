#include "cli.hpp"

int main(int argc, char** argv) { return bitcascade::cli::run_cli(argc, argv); }
