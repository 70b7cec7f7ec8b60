// Copyright 2026 The qspace Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef QSPACE_PARALLEL_HPP
#define QSPACE_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace qspace {

// Worker count used by parallel_chunks. Defaults to the QSPACE_THREADS
// environment variable when set, else the hardware concurrency.
int thread_count();
void set_thread_count(int n);

// Splits [0, count) into fixed-size chunks and runs fn(chunk_index, begin,
// end) for each one, spread over thread_count() workers. Chunk boundaries
// depend only on count and chunk_size, so per-chunk partial results reduced
// in chunk order are identical for every worker count.
void parallel_chunks(std::size_t count, std::size_t chunk_size,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

inline std::size_t chunk_count(std::size_t count, std::size_t chunk_size) {
  return (count + chunk_size - 1) / chunk_size;
}

}  // namespace qspace

#endif  // QSPACE_PARALLEL_HPP
