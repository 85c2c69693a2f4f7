#include "vcnac/weights.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "vcnac/hash.hpp"

namespace vcnac::nn {

namespace {

class Writer {
public:
    void bytes(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        out_.insert(out_.end(), b, b + n);
    }
    template <typename T>
    void le(T v) {
        for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
    }
    std::vector<std::uint8_t> take() { return std::move(out_); }

private:
    std::vector<std::uint8_t> out_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}
    std::span<const std::uint8_t> bytes(std::size_t n) {
        if (n > b_.size() - pos_) throw FormatError("VCNW container is truncated");
        auto s = b_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    template <typename T>
    T le() {
        const auto s = bytes(sizeof(T));
        T v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(s[i]) << (8 * i));
        return v;
    }
    std::size_t remaining() const { return b_.size() - pos_; }

private:
    std::span<const std::uint8_t> b_;
    std::size_t pos_ = 0;
};

}  // namespace

void WeightStore::insert(const std::string& name, Tensor t) { tensors_[name] = std::move(t); }

const Tensor& WeightStore::at(const std::string& name) const {
    const auto it = tensors_.find(name);
    if (it == tensors_.end()) throw ConfigError("weight '" + name + "' is missing from the store");
    return it->second;
}

Tensor& WeightStore::at(const std::string& name) {
    const auto it = tensors_.find(name);
    if (it == tensors_.end()) throw ConfigError("weight '" + name + "' is missing from the store");
    return it->second;
}

std::size_t WeightStore::parameter_count() const {
    std::size_t n = 0;
    for (const auto& [_, t] : tensors_) n += t.size();
    return n;
}

std::uint64_t WeightStore::digest() const {
    Fnv1a64 h;
    const auto bytes = serialize();
    h.update(std::as_bytes(std::span(bytes)));
    return h.value();
}

std::vector<std::uint8_t> WeightStore::serialize() const {
    Writer w;
    w.bytes("VCNW", 4);
    w.le<std::uint8_t>(kVersion);
    w.le<std::uint64_t>(config_digest_);
    w.le<std::uint32_t>(static_cast<std::uint32_t>(tensors_.size()));
    std::uint64_t offset = 0;
    for (const auto& [name, t] : tensors_) {
        w.le<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
        w.bytes(name.data(), name.size());
        w.le<std::uint32_t>(static_cast<std::uint32_t>(t.rank()));
        for (auto d : t.shape()) w.le<std::uint32_t>(static_cast<std::uint32_t>(d));
        w.le<std::uint64_t>(offset);
        offset += static_cast<std::uint64_t>(t.size()) * 4;
    }
    w.le<std::uint64_t>(offset);
    for (const auto& [_, t] : tensors_) {
        for (float v : t.data()) w.le<std::uint32_t>(std::bit_cast<std::uint32_t>(v));
    }
    return w.take();
}

WeightStore WeightStore::deserialize(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    const auto magic = r.bytes(4);
    if (std::memcmp(magic.data(), "VCNW", 4) != 0) throw FormatError("not a VCNW weight container (bad magic)");
    const auto version = r.le<std::uint8_t>();
    if (version != kVersion) throw FormatError("unsupported VCNW version " + std::to_string(version));
    WeightStore store(r.le<std::uint64_t>());
    const auto count = r.le<std::uint32_t>();

    struct Entry {
        std::string name;
        Shape shape;
        std::uint64_t offset;
    };
    std::vector<Entry> entries;
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto name_len = r.le<std::uint32_t>();
        const auto name_bytes = r.bytes(name_len);
        Entry e;
        e.name.assign(name_bytes.begin(), name_bytes.end());
        const auto ndim = r.le<std::uint32_t>();
        if (ndim > 8) throw FormatError("tensor '" + e.name + "' has implausible rank");
        for (std::uint32_t k = 0; k < ndim; ++k) e.shape.push_back(r.le<std::uint32_t>());
        e.offset = r.le<std::uint64_t>();
        entries.push_back(std::move(e));
    }
    const auto blob_bytes = r.le<std::uint64_t>();
    if (blob_bytes != r.remaining()) {
        throw FormatError("VCNW blob size " + std::to_string(blob_bytes) + " does not match remaining " +
                          std::to_string(r.remaining()) + " bytes");
    }
    const auto blob = r.bytes(static_cast<std::size_t>(blob_bytes));

    // Extents must lie inside the blob and must not overlap.
    std::vector<std::pair<std::uint64_t, std::uint64_t>> extents;
    for (const auto& e : entries) {
        const std::uint64_t len = static_cast<std::uint64_t>(shape_size(e.shape)) * 4;
        if (e.offset > blob_bytes || len > blob_bytes - e.offset) {
            throw FormatError("tensor '" + e.name + "' extends past the end of the blob");
        }
        extents.emplace_back(e.offset, e.offset + len);
    }
    std::sort(extents.begin(), extents.end());
    for (std::size_t i = 1; i < extents.size(); ++i) {
        if (extents[i].first < extents[i - 1].second) throw FormatError("VCNW tensor extents overlap");
    }

    for (auto& e : entries) {
        if (store.contains(e.name)) throw FormatError("duplicate tensor name '" + e.name + "'");
        const std::size_t n = shape_size(e.shape);
        std::vector<float> data(n);
        const std::uint8_t* p = blob.data() + e.offset;
        for (std::size_t i = 0; i < n; ++i, p += 4) {
            const std::uint32_t u = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                                    (static_cast<std::uint32_t>(p[2]) << 16) |
                                    (static_cast<std::uint32_t>(p[3]) << 24);
            data[i] = std::bit_cast<float>(u);
        }
        store.insert(e.name, Tensor(std::move(e.shape), std::move(data)));
    }
    return store;
}

void save_weights(const WeightStore& store, const std::string& path) {
    const auto bytes = store.serialize();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for '" + path + "'");
}

WeightStore load_weights(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return WeightStore::deserialize(bytes);
}

}  // namespace vcnac::nn
