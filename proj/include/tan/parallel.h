/*
 * Copyright 2026 The TAN Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef TAN_PARALLEL_H_
#define TAN_PARALLEL_H_

#include <cstdint>
#include <functional>

namespace tanet {

// Worker cap: hardware concurrency, lowered by the TAN_THREADS env var.
int WorkerCount();

// Runs fn(i) for i in [0, n) on up to WorkerCount() threads. Callers write
// results into per-index slots so the outcome never depends on scheduling.
// The first exception thrown by any task is rethrown after all workers join.
void ParallelFor(int64_t n, const std::function<void(int64_t)>& fn);

}  // namespace tanet

#endif  // TAN_PARALLEL_H_
