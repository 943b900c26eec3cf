// Copyright (c) 2026, The sharp authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace sharp::model {

std::string sha1_hex(std::string_view bytes);

// Hash git assigns to a blob with these contents: sha1("blob <len>\0" + bytes).
std::string git_blob_sha1(std::string_view bytes);
std::string git_blob_sha1_file(const std::filesystem::path& path);

}  // namespace sharp::model
