#pragma once

// Thin wrapper over FFTW's advanced interface. Plans are cached for the process
// lifetime and executed with the new-array API, which is safe to call concurrently.

#include <complex>
#include <cstddef>

namespace bdb::detail {

using cplx = std::complex<double>;

/// In-place unnormalized DFT over `rank` axes of extent n (row-major among themselves).
/// sign = -1 is the forward transform. `stride` separates consecutive elements of one
/// transform, `dist` separates consecutive transforms.
void dft(cplx* data, int rank, int n, std::size_t howmany, std::size_t stride, std::size_t dist, int sign);

}  // namespace bdb::detail
