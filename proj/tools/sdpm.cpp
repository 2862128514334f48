// Apache License, Version 2.0, refer to LICENSE.txt

#include "sdpm/cli/app.hpp"

int main(int argc, char** argv) { return sdpm::cli::run(argc, argv); }
