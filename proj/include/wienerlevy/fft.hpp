// fft.hpp
//
// Thin RAII layer over FFTW plus a small thread pool helper. FFTW's planner
// is not reentrant, so plan creation and destruction go through one mutex;
// executing a plan on fresh arrays is thread-safe.

#ifndef WIENERLEVY_FFT_HPP
#define WIENERLEVY_FFT_HPP

#include <algorithm>
#include <complex>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <fftw3.h>

#include "wienerlevy/errors.hpp"

namespace wienerlevy {

using cplx = std::complex<double>;

namespace detail {
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace detail

enum class FftDirection : int { forward = FFTW_FORWARD, backward = FFTW_BACKWARD };

/// Unnormalized multidimensional complex DFT of fixed shape (row-major, last
/// axis fastest). Forward uses the e^{-2 pi i jk/M} kernel.
class FftPlan {
public:
    FftPlan(std::vector<int> shape, FftDirection dir) : shape_(std::move(shape)) {
        if (shape_.empty()) throw ValidationError("FftPlan: empty shape");
        size_ = 1;
        for (int m : shape_) {
            if (m <= 0) throw ValidationError("FftPlan: non-positive axis length");
            size_ *= static_cast<std::size_t>(m);
        }
        std::vector<cplx> a(size_), b(size_);
        std::lock_guard lock(detail::fftw_planner_mutex());
        plan_ = fftw_plan_dft(static_cast<int>(shape_.size()), shape_.data(),
                              reinterpret_cast<fftw_complex*>(a.data()),
                              reinterpret_cast<fftw_complex*>(b.data()), static_cast<int>(dir),
                              FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (plan_ == nullptr) throw ConfigurationError("FFTW failed to create a plan");
    }

    FftPlan(const FftPlan&) = delete;
    FftPlan& operator=(const FftPlan&) = delete;
    FftPlan(FftPlan&& o) noexcept : shape_(std::move(o.shape_)), size_(o.size_), plan_(o.plan_) {
        o.plan_ = nullptr;
    }
    FftPlan& operator=(FftPlan&&) = delete;

    ~FftPlan() {
        if (plan_ != nullptr) {
            std::lock_guard lock(detail::fftw_planner_mutex());
            fftw_destroy_plan(plan_);
        }
    }

    std::size_t size() const noexcept { return size_; }

    void execute(std::span<const cplx> in, std::span<cplx> out) const {
        if (in.size() != size_ || out.size() != size_)
            throw ValidationError("FftPlan::execute: buffer size mismatch");
        // FFTW never writes to the input of an out-of-place complex transform.
        fftw_execute_dft(plan_,
                         reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in.data())),
                         reinterpret_cast<fftw_complex*>(out.data()));
    }

    void execute_inplace(std::span<cplx> data) const {
        if (data.size() != size_) throw ValidationError("FftPlan::execute: buffer size mismatch");
        auto* p = reinterpret_cast<fftw_complex*>(data.data());
        // In-place on an out-of-place plan is not allowed; copy through scratch.
        std::vector<cplx> scratch(data.begin(), data.end());
        fftw_execute_dft(plan_, reinterpret_cast<fftw_complex*>(scratch.data()), p);
    }

private:
    std::vector<int> shape_;
    std::size_t size_ = 0;
    fftw_plan plan_ = nullptr;
};

/// One-shot 1-D transform.
inline std::vector<cplx> fft(std::span<const cplx> in, FftDirection dir) {
    std::vector<cplx> out(in.size());
    if (in.empty()) return out;
    FftPlan plan({static_cast<int>(in.size())}, dir);
    plan.execute(in, out);
    return out;
}

/// Worker count from WLEVY_THREADS, falling back to the hardware count.
inline unsigned thread_count() {
    if (const char* env = std::getenv("WLEVY_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return static_cast<unsigned>(n);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(i) for i in [0, n) over contiguous chunks. Results must not
/// depend on scheduling; callers write to disjoint slots.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
    const std::size_t workers = std::min<std::size_t>(thread_count(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                const std::size_t lo = n * w / workers;
                const std::size_t hi = n * (w + 1) / workers;
                for (std::size_t i = lo; i < hi; ++i) body(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace wienerlevy

#endif  // WIENERLEVY_FFT_HPP
