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

#ifndef TAN_DIAGNOSTICS_H_
#define TAN_DIAGNOSTICS_H_

#include <cstdint>
#include <functional>
#include <string>

namespace tanet {

using WarningHandler = std::function<void(const std::string&)>;

// Routes non-fatal diagnostics. Default handler writes to stderr.
void EmitWarning(const std::string& message);

// Installs `handler` for the lifetime of the object, restoring the previous
// one afterwards. Not thread-safe; install before spawning workers.
class ScopedWarningHandler {
 public:
  explicit ScopedWarningHandler(WarningHandler handler);
  ~ScopedWarningHandler();
  ScopedWarningHandler(const ScopedWarningHandler&) = delete;
  ScopedWarningHandler& operator=(const ScopedWarningHandler&) = delete;

 private:
  WarningHandler previous_;
};

// Counts multiply-accumulates issued by the convolution and linear kernels on
// the current thread while alive. Bias adds and activations are not counted.
class MacCounter {
 public:
  MacCounter();
  ~MacCounter();
  MacCounter(const MacCounter&) = delete;
  MacCounter& operator=(const MacCounter&) = delete;

  int64_t count() const { return count_; }

  static void Add(int64_t macs);

 private:
  int64_t count_ = 0;
  MacCounter* previous_;
};

}  // namespace tanet

#endif  // TAN_DIAGNOSTICS_H_
