// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include <cstdlib>
#include <cstring>
#include <iostream>

#include "isac/simd/kernels.hpp"
#include "kernels_impl.hpp"

namespace isac::simd {

#ifndef ISAC_HAVE_AVX2
namespace detail {
const Kernels* avx2_table() { return nullptr; }
}  // namespace detail
#endif

const Kernels* avx2_kernels() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return detail::avx2_table();
#endif
  return nullptr;
}

namespace {

const Kernels& select() {
  const char* env = std::getenv("ISAC_SIMD");
  const Kernels* avx2 = avx2_kernels();
  if (env != nullptr && std::strcmp(env, "scalar") == 0) return scalar_kernels();
  if (env != nullptr && std::strcmp(env, "avx2") == 0 && avx2 == nullptr) {
    std::cerr << "warning: ISAC_SIMD=avx2 requested but unavailable, using scalar kernels\n";
  }
  return avx2 != nullptr ? *avx2 : scalar_kernels();
}

}  // namespace

const Kernels& kernels() {
  static const Kernels& active = select();
  return active;
}

}  // namespace isac::simd
