// Copyright 2026 The convfeat Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CONVFEAT_PARALLEL_H_
#define CONVFEAT_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace convfeat {

// Process-wide worker count used by the engine's internal loops. Defaults to
// the CONVFEAT_THREADS environment variable, or 1 when unset.
int NumThreads();
void SetNumThreads(int n);

// Splits [begin, end) into contiguous chunks and runs fn(chunk_begin,
// chunk_end) for each, on up to NumThreads() threads. Chunk boundaries depend
// only on the range and the thread count, so results stay deterministic as
// long as chunks write disjoint outputs.
void ParallelFor(std::size_t begin, std::size_t end,
                 const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace convfeat

#endif  // CONVFEAT_PARALLEL_H_
