#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>
#include <vector>

#include "bdb/error.hpp"

namespace bdb::detail {

namespace {

using PlanKey = std::tuple<int, int, std::size_t, std::size_t, std::size_t, int>;

struct PlanCache {
    std::mutex mutex;
    std::map<PlanKey, fftw_plan> plans;
    ~PlanCache() {
        for (auto& [key, plan] : plans) fftw_destroy_plan(plan);
    }
};

PlanCache& cache() {
    static PlanCache instance;
    return instance;
}

fftw_plan get_plan(int rank, int n, std::size_t howmany, std::size_t stride, std::size_t dist, int sign) {
    PlanCache& c = cache();
    const PlanKey key{rank, n, howmany, stride, dist, sign};
    std::lock_guard<std::mutex> lock(c.mutex);
    auto it = c.plans.find(key);
    if (it != c.plans.end()) return it->second;

    std::vector<int> dims(static_cast<std::size_t>(rank), n);
    std::size_t extent = 1;
    for (int i = 0; i < rank; ++i) extent *= static_cast<std::size_t>(n);
    const std::size_t span = (extent - 1) * stride + (howmany - 1) * dist + 1;
    auto* scratch = fftw_alloc_complex(span);
    fftw_plan plan = fftw_plan_many_dft(rank, dims.data(), static_cast<int>(howmany), scratch, nullptr,
                                        static_cast<int>(stride), static_cast<int>(dist), scratch, nullptr,
                                        static_cast<int>(stride), static_cast<int>(dist), sign,
                                        FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(scratch);
    if (plan == nullptr) throw Error(ErrorCode::kInvalidArgument, "FFTW could not create a plan");
    c.plans.emplace(key, plan);
    return plan;
}

}  // namespace

void dft(cplx* data, int rank, int n, std::size_t howmany, std::size_t stride, std::size_t dist, int sign) {
    if (howmany == 0) return;
    fftw_plan plan = get_plan(rank, n, howmany, stride, dist, sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD);
    auto* ptr = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(plan, ptr, ptr);
}

}  // namespace bdb::detail
