#include <cstdlib>
#include <string_view>

#include "aesthetics/simd/kernels.hpp"

namespace aesthetics::simd {

const KernelTable& active_kernels() {
  static const KernelTable& table = []() -> const KernelTable& {
    const char* forced = std::getenv("AESTHETICS_KERNELS");
    if (forced != nullptr && std::string_view(forced) == "scalar") return scalar_kernels();
    if (const auto* avx2 = avx2_kernels()) return *avx2;
    return scalar_kernels();
  }();
  return table;
}

}  // namespace aesthetics::simd
