// SPDX-License-Identifier: Apache-2.0
#include <atomic>
#include <cstdlib>
#include <string_view>

#include "simforge/kernels.hpp"

namespace simforge::kernels {

#ifndef SIMFORGE_HAVE_AVX2
const KernelTable* avx2_table() { return nullptr; }
#endif

namespace {

bool cpu_has_avx2() {
#if defined(SIMFORGE_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend initial_backend() {
  if (const char* env = std::getenv("SIMFORGE_KERNELS")) {
    if (std::string_view(env) == "scalar") return Backend::scalar;
  }
  return backend_available(Backend::avx2) ? Backend::avx2 : Backend::scalar;
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{
      initial_backend() == Backend::avx2 ? avx2_table() : &scalar_table()};
  return table;
}

}  // namespace

bool backend_available(Backend b) {
  if (b == Backend::scalar) return true;
  static const bool ok = avx2_table() != nullptr && cpu_has_avx2();
  return ok;
}

Backend active_backend() {
  return current().load() == &scalar_table() ? Backend::scalar : Backend::avx2;
}

void set_active_backend(Backend b) {
  if (b == Backend::avx2 && backend_available(b)) {
    current().store(avx2_table());
  } else {
    current().store(&scalar_table());
  }
}

std::string_view backend_name(Backend b) { return b == Backend::avx2 ? "avx2" : "scalar"; }

const KernelTable& active() { return *current().load(std::memory_order_relaxed); }

}  // namespace simforge::kernels
