// Copyright (c) 2026, The sharp authors
// SPDX-License-Identifier: Apache-2.0

#include "sharp/model/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <json.hpp>

namespace sharp::model {

static_assert(std::endian::native == std::endian::little, "tensor files are written in host byte order");

namespace {

using Kind = CheckpointError::Kind;

void put_u32(std::string& buf, std::uint32_t v) { buf.append(reinterpret_cast<const char*>(&v), 4); }

class Reader {
public:
    Reader(std::string bytes, std::string path) : buf_(std::move(bytes)), path_(std::move(path)) {}

    void need(std::size_t n) const {
        if (pos_ + n > buf_.size()) {
            throw CheckpointError(Kind::Truncated, "truncated file " + path_ + ": needed " + std::to_string(n) +
                                                       " bytes at offset " + std::to_string(pos_));
        }
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v;
        std::memcpy(&v, buf_.data() + pos_, 4);
        pos_ += 4;
        return v;
    }
    std::string bytes(std::size_t n) {
        need(n);
        std::string s = buf_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    void floats(tk::Buffer<float>& out) {
        need(out.size() * 4);
        std::memcpy(out.data(), buf_.data() + pos_, out.size() * 4);
        pos_ += out.size() * 4;
    }
    bool done() const { return pos_ == buf_.size(); }

private:
    std::string buf_;
    std::string path_;
    std::size_t pos_ = 0;
};

nlohmann::json config_json(const ModelConfig& c) {
    return {{"n_layers", c.n_layers}, {"d_model", c.d_model}, {"d_hidden", c.d_hidden}, {"n_heads", c.n_heads},
            {"vocab_size", c.vocab_size}, {"max_seq_len", c.max_seq_len}, {"seed", c.seed}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.n_layers = j.at("n_layers");
    c.d_model = j.at("d_model");
    c.d_hidden = j.at("d_hidden");
    c.n_heads = j.at("n_heads");
    c.vocab_size = j.at("vocab_size");
    c.max_seq_len = j.at("max_seq_len");
    c.seed = j.at("seed");
    return c;
}

}  // namespace

void write_tensor_file(const std::filesystem::path& path, const TensorFile& file) {
    if (file.magic.size() != 4) throw std::invalid_argument("tensor file magic must be 4 bytes");
    std::string buf = file.magic;
    put_u32(buf, file.version);
    put_u32(buf, static_cast<std::uint32_t>(file.metadata.size()));
    buf += file.metadata;
    put_u32(buf, static_cast<std::uint32_t>(file.tensors.size()));
    for (const auto& [name, t] : file.tensors) {
        put_u32(buf, static_cast<std::uint32_t>(name.size()));
        buf += name;
        put_u32(buf, static_cast<std::uint32_t>(t.shape.size()));
        for (std::size_t d : t.shape) put_u32(buf, static_cast<std::uint32_t>(d));
    }
    for (const auto& [name, t] : file.tensors) {
        buf.append(reinterpret_cast<const char*>(t.data.data()), t.data.size() * sizeof(float));
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError(Kind::Io, "cannot open " + path.string() + " for writing");
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw CheckpointError(Kind::Io, "write failed: " + path.string());
}

TensorFile read_tensor_file(const std::filesystem::path& path, const std::string& magic, std::uint32_t version) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError(Kind::Io, "cannot open " + path.string());
    Reader r(std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>()), path.string());
    TensorFile f;
    f.magic = r.bytes(4);
    if (f.magic != magic) {
        throw CheckpointError(Kind::BadMagic, "bad magic in " + path.string() + ": expected " + magic);
    }
    f.version = r.u32();
    if (f.version != version) {
        throw CheckpointError(Kind::VersionMismatch, "version mismatch in " + path.string() + ": file has " +
                                                         std::to_string(f.version) + ", reader expects " +
                                                         std::to_string(version));
    }
    f.metadata = r.bytes(r.u32());
    const std::uint32_t count = r.u32();
    for (std::uint32_t i = 0; i < count; ++i) {
        std::string name = r.bytes(r.u32());
        const std::uint32_t rank = r.u32();
        tk::Shape shape;
        for (std::uint32_t k = 0; k < rank; ++k) shape.push_back(r.u32());
        f.tensors.emplace_back(std::move(name), Tensor<float>::zeros(std::move(shape)));
    }
    for (auto& [name, t] : f.tensors) r.floats(t.data);
    if (!r.done()) throw CheckpointError(Kind::Format, "trailing bytes after tensor data in " + path.string());
    return f;
}

void save_checkpoint(const WeightStore& w, const std::filesystem::path& path) {
    TensorFile f;
    f.magic = "SHRP";
    f.metadata = nlohmann::json{{"config", config_json(w.config)}}.dump();
    for (const auto& [name, t] : w.named()) f.tensors.emplace_back(name, *t);
    write_tensor_file(path, f);
}

WeightStore load_checkpoint(const std::filesystem::path& path) {
    TensorFile f = read_tensor_file(path, "SHRP");
    ModelConfig c;
    try {
        c = config_from_json(nlohmann::json::parse(f.metadata).at("config"));
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError(Kind::Format, "unreadable config block in " + path.string() + ": " + e.what());
    }
    WeightStore w = init_model(c);
    auto slots = w.named_mutable();
    if (slots.size() != f.tensors.size()) {
        throw CheckpointError(Kind::Format, "name table of " + path.string() + " lists " +
                                                std::to_string(f.tensors.size()) + " tensors, expected " +
                                                std::to_string(slots.size()));
    }
    for (std::size_t i = 0; i < slots.size(); ++i) {
        auto& [name, dst] = slots[i];
        auto& [fname, src] = f.tensors[i];
        if (name != fname || dst->shape != src.shape) {
            throw CheckpointError(Kind::Format, "tensor " + fname + " " + tk::shape_string(src.shape) +
                                                    " does not match expected " + name + " " +
                                                    tk::shape_string(dst->shape));
        }
        *dst = std::move(src);
    }
    return w;
}

}  // namespace sharp::model
