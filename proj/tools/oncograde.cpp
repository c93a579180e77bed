#include "oncograde/cli.hpp"

int main(int argc, char** argv) { return oncograde::cli::run(argc, argv); }
