#include "hbs/cli.hpp"

int main(int argc, char** argv) { return hbs::cli::run_cli(argc, argv); }
