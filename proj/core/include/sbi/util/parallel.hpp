// Copyright 2026 The sbi-engine Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <functional>

namespace sbi {

// Worker count honoring SBI_ENGINE_THREADS as an upper cap. A request of 0
// means "as many as the hardware offers".
std::size_t worker_count(std::size_t requested = 0);

// Runs body(i) for i in [0, n) on up to `workers` threads using contiguous
// blocks. The first exception thrown by any worker is rethrown on the caller.
void parallel_for(std::size_t n, std::size_t workers,
                  const std::function<void(std::size_t)>& body);

}  // namespace sbi
