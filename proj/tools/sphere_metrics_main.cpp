#include "spheremetrics/experiments.hpp"

int main(int argc, char** argv) { return spheremetrics::cli_main(argc, argv); }
