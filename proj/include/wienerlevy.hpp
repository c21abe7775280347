// Umbrella header.
#ifndef WIENERLEVY_HPP
#define WIENERLEVY_HPP

#include "wienerlevy/errors.hpp"
#include "wienerlevy/fft.hpp"
#include "wienerlevy/measures.hpp"
#include "wienerlevy/measures_io.hpp"
#include "wienerlevy/analytic.hpp"
#include "wienerlevy/torus_coeffs.hpp"
#include "wienerlevy/oracle.hpp"
#include "wienerlevy/synthesis.hpp"
#include "wienerlevy/config.hpp"

#endif  // WIENERLEVY_HPP
