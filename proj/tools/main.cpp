#include "ascent/cli.hpp"

int main(int argc, char** argv) { return ascent::cli::dispatch(argc, argv); }
