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

#include "tan/diagnostics.h"

#include <iostream>

namespace tanet {
namespace {

WarningHandler& CurrentHandler() {
  static WarningHandler handler = [](const std::string& message) {
    std::cerr << "warning: " << message << "\n";
  };
  return handler;
}

thread_local MacCounter* active_counter = nullptr;

}  // namespace

void EmitWarning(const std::string& message) {
  if (CurrentHandler()) CurrentHandler()(message);
}

ScopedWarningHandler::ScopedWarningHandler(WarningHandler handler)
    : previous_(std::move(CurrentHandler())) {
  CurrentHandler() = std::move(handler);
}

ScopedWarningHandler::~ScopedWarningHandler() {
  CurrentHandler() = std::move(previous_);
}

MacCounter::MacCounter() : previous_(active_counter) { active_counter = this; }

MacCounter::~MacCounter() { active_counter = previous_; }

void MacCounter::Add(int64_t macs) {
  if (active_counter != nullptr) active_counter->count_ += macs;
}

}  // namespace tanet
