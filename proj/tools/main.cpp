#include "cli.hpp"

int main(int argc, char** argv) { return smilepc::cli::run(argc, argv); }
