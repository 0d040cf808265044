#include "netchoice/cli.hpp"

int main(int argc, char** argv) { return netchoice::cli::run_subcommand(argc, argv); }
