#include "rydberg/cli.hpp"

int main(int argc, char **argv) { return rydberg::cli::run(argc, argv); }
