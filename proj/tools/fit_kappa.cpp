// Prints the decay-bound constants that density.cpp freezes for n = 2..6.
#include <cstdio>
#include <cstdlib>

#include "hyperangle/density.hpp"

int main(int argc, char** argv) {
    const int grid = argc > 1 ? std::atoi(argv[1]) : 48;
    for (int n = 2; n <= 6; ++n)
        std::printf("n=%d kappa1=%.6g kappa2=%.6g\n", n, hyperangle::fit_kappa1(n, grid),
                    hyperangle::fit_kappa2(n, grid));
}
