// Copyright (c) 2026, The sharp authors
// SPDX-License-Identifier: Apache-2.0

#include "sharp/model/digest.h"

#include <openssl/sha.h>

#include <fstream>
#include <iterator>
#include <stdexcept>

namespace sharp::model {

std::string sha1_hex(std::string_view bytes) {
    unsigned char md[SHA_DIGEST_LENGTH];
    SHA1(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(), md);
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out(2 * SHA_DIGEST_LENGTH, '0');
    for (int i = 0; i < SHA_DIGEST_LENGTH; ++i) {
        out[2 * i] = kHex[md[i] >> 4];
        out[2 * i + 1] = kHex[md[i] & 15];
    }
    return out;
}

std::string git_blob_sha1(std::string_view bytes) {
    std::string buf = "blob " + std::to_string(bytes.size());
    buf.push_back('\0');
    buf.append(bytes);
    return sha1_hex(buf);
}

std::string git_blob_sha1_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    const std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return git_blob_sha1(s);
}

}  // namespace sharp::model
