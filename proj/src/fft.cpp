#include "mcfsim/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>

namespace mcfsim {

namespace {

std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
}

// FFTW planning is not thread safe; execution with a cached plan is.
// New-array execution requires the in-place property to match the plan.
fftw_plan plan_for(std::size_t n, int sign, bool in_place) {
    static std::map<std::tuple<std::size_t, int, bool>, fftw_plan> cache;
    std::lock_guard<std::mutex> lock(plan_mutex());
    auto key = std::make_tuple(n, sign, in_place);
    if (auto it = cache.find(key); it != cache.end()) return it->second;

    // FFTW_ESTIMATE never touches the arrays, so scratch buffers suffice.
    std::vector<cplx> a(n), b(n);
    auto* pa = reinterpret_cast<fftw_complex*>(a.data());
    auto* pb = in_place ? pa : reinterpret_cast<fftw_complex*>(b.data());
    fftw_plan p = fftw_plan_dft_1d(static_cast<int>(n), pa, pb, sign,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (p == nullptr) throw std::runtime_error("fftw: failed to create plan");
    cache.emplace(key, p);
    return p;
}

void execute(std::span<const cplx> in, std::span<cplx> out, int sign) {
    if (in.size() != out.size()) throw std::invalid_argument("fft: size mismatch");
    if (in.empty()) return;
    const bool in_place = static_cast<const void*>(in.data()) == out.data();
    fftw_plan p = plan_for(in.size(), sign, in_place);
    // FFTW takes a non-const input pointer but does not modify the input of
    // an out-of-place complex transform.
    auto* src = reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in.data()));
    auto* dst = reinterpret_cast<fftw_complex*>(out.data());
    fftw_execute_dft(p, src, dst);
}

}  // namespace

void fft_forward(std::span<const cplx> in, std::span<cplx> out) {
    execute(in, out, FFTW_FORWARD);
}

void fft_inverse(std::span<const cplx> in, std::span<cplx> out) {
    execute(in, out, FFTW_BACKWARD);
    const double scale = 1.0 / static_cast<double>(out.size());
    for (auto& v : out) v *= scale;
}

std::vector<cplx> fft(std::span<const cplx> in) {
    std::vector<cplx> out(in.size());
    fft_forward(in, out);
    return out;
}

std::vector<cplx> ifft(std::span<const cplx> in) {
    std::vector<cplx> out(in.size());
    fft_inverse(in, out);
    return out;
}

}  // namespace mcfsim
