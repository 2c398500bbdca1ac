// Copyright 2026 The Fidelius Authors.
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

#ifndef FIDELIUS_SERIALIZE_H_
#define FIDELIUS_SERIALIZE_H_

#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"

namespace fidelius {

// Every real written to disk carries 12 significant digits.
inline constexpr int kSignificantDigits = 12;

// Rounds x to kSignificantDigits significant digits. Idempotent, and a
// value written through it parses back to the identical double.
double Round12(double x);

// "%.12g" rendering, as used in CSV output.
std::string FormatReal(double x);

// Fixed-point rendering with the given number of decimals (SVG output).
std::string FormatFixed(double x, int decimals);

// Compact single-line JSON dump with insertion-ordered keys.
std::string DumpLine(const nlohmann::ordered_json& value);

// Writes the whole file at once; throws IoError naming the path.
void WriteTextFile(const std::filesystem::path& path, std::string_view text);
std::string ReadTextFile(const std::filesystem::path& path);

}  // namespace fidelius

#endif  // FIDELIUS_SERIALIZE_H_
