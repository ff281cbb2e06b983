/*
 * Copyright 2026 The munmt Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef MUNMT_COMMON_DIGEST_HPP
#define MUNMT_COMMON_DIGEST_HPP

#include <filesystem>
#include <string>
#include <string_view>

namespace munmt {

// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

// Git blob id ("blob <size>\0<content>" hashed with SHA-1).
std::string git_blob_hash(std::string_view content);

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temp file and renames it over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view data);

}  // namespace munmt

#endif  // MUNMT_COMMON_DIGEST_HPP
