#include "cli.hpp"

int main(int argc, char** argv) { return pointing::cli::run(argc, argv); }
