#include "projner/cli.hpp"

int main(int argc, char** argv) { return projner::cli::run(argc, argv); }
