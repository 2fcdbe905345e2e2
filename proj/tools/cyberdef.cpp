#include "cyberdef/cli.hpp"

int main(int argc, char** argv) { return cyberdef::cli::run_cli(argc, argv); }
