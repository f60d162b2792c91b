#ifndef TAMMKIT_COMMON_HPP
#define TAMMKIT_COMMON_HPP

#include <complex>
#include <stdexcept>
#include <string>

namespace tammkit {

using Complex = std::complex<double>;

// Planck constant times speed of light. Lengths are nm, energies eV
// throughout; time-domain quantities use c = 1 internally (time in nm)
// and convert to fs only at the I/O boundary.
inline constexpr double kHcEvNm = 1239.8420;
inline constexpr double kHbarCEvNm = kHcEvNm / 6.283185307179586476925287;
inline constexpr double kCNmPerFs = 299.792458;

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad inputs: violated preconditions, malformed geometry, parse failures.
struct DomainError : Error {
    using Error::Error;
};

// Iterative procedure failed to converge or produced non-finite values.
struct NumericError : Error {
    using Error::Error;
};

// Filesystem and serialization failures.
struct IoError : Error {
    using Error::Error;
};

}  // namespace tammkit

#endif
