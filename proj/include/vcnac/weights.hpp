#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "vcnac/tensor.hpp"

namespace vcnac::nn {

// Named tensors plus the digest of the codec config they were built for.
//
// On-disk "VCNW" layout, all integers little-endian:
//   "VCNW" | version:u8 | config_digest:u64 | count:u32
//   count x { name_len:u32 | name:utf8 | ndim:u32 | dims:u32[ndim] | offset:u64 }
//   blob_bytes:u64 | blob (float32 LE)
// offset is the byte offset of the tensor's data within the blob.
class WeightStore {
public:
    static constexpr std::uint8_t kVersion = 1;

    WeightStore() = default;
    explicit WeightStore(std::uint64_t config_digest) : config_digest_(config_digest) {}

    std::uint64_t config_digest() const noexcept { return config_digest_; }
    void set_config_digest(std::uint64_t d) noexcept { config_digest_ = d; }

    void insert(const std::string& name, Tensor t);
    bool contains(const std::string& name) const { return tensors_.count(name) != 0; }
    // Throws ConfigError naming the missing tensor.
    const Tensor& at(const std::string& name) const;
    Tensor& at(const std::string& name);

    const std::map<std::string, Tensor>& tensors() const noexcept { return tensors_; }
    std::size_t parameter_count() const;

    // Content fingerprint over config digest, names, shapes and raw values.
    std::uint64_t digest() const;

    std::vector<std::uint8_t> serialize() const;
    static WeightStore deserialize(std::span<const std::uint8_t> bytes);

    friend bool operator==(const WeightStore&, const WeightStore&) = default;

private:
    std::uint64_t config_digest_ = 0;
    std::map<std::string, Tensor> tensors_;
};

void save_weights(const WeightStore& store, const std::string& path);
WeightStore load_weights(const std::string& path);

}  // namespace vcnac::nn
