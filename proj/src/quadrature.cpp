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

#include "isac/quadrature.hpp"

#include <gsl/gsl_integration.h>

#include <map>
#include <mutex>
#include <stdexcept>

namespace isac {

std::shared_ptr<const GaussLegendreRule> gauss_legendre(int n) {
  static std::mutex mu;
  static std::map<int, std::shared_ptr<const GaussLegendreRule>> cache;
  if (n < 1) throw std::invalid_argument("quadrature node count must be positive");
  std::lock_guard lock(mu);
  if (auto it = cache.find(n); it != cache.end()) return it->second;

  gsl_integration_glfixed_table* table = gsl_integration_glfixed_table_alloc(n);
  if (table == nullptr) throw std::runtime_error("failed to build Gauss-Legendre table");
  auto rule = std::make_shared<GaussLegendreRule>();
  rule->nodes.resize(n);
  rule->weights.resize(n);
  for (int i = 0; i < n; ++i) {
    gsl_integration_glfixed_point(-1.0, 1.0, i, &rule->nodes[i], &rule->weights[i], table);
  }
  gsl_integration_glfixed_table_free(table);
  cache.emplace(n, rule);
  return rule;
}

}  // namespace isac
