#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "edm/dataset.hpp"

namespace edm::detail {

static_assert(std::endian::native == std::endian::little,
              "tensor file IO assumes a little-endian host");

class Reader {
public:
    explicit Reader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
        if (!in_) throw FormatError(path + ": cannot open");
    }

    std::uint64_t offset() const { return offset_; }
    const std::string& path() const { return path_; }

    void raw(void* dst, std::size_t n, const char* what) {
        in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n)
            throw FormatError(path_ + ": truncated " + what + " at byte offset " +
                              std::to_string(offset_));
        offset_ += n;
    }

    std::uint32_t u32(const char* what) {
        std::uint32_t v;
        raw(&v, 4, what);
        return v;
    }

    void magic(const char expect[4]) {
        char m[4];
        raw(m, 4, "magic");
        if (std::memcmp(m, expect, 4) != 0)
            throw FormatError(path_ + ": bad magic at byte offset 0, expected " +
                              std::string(expect, 4));
    }

    void version(std::uint32_t expect) {
        std::uint32_t v = u32("version");
        if (v != expect)
            throw FormatError(path_ + ": unsupported version " + std::to_string(v) +
                              " at byte offset 4");
    }

private:
    std::ifstream in_;
    std::string path_;
    std::uint64_t offset_ = 0;
};

class Writer {
public:
    explicit Writer(const std::string& path) : out_(path, std::ios::binary), path_(path) {
        if (!out_) throw FormatError(path + ": cannot open for writing");
    }

    void raw(const void* src, std::size_t n) {
        out_.write(static_cast<const char*>(src), static_cast<std::streamsize>(n));
    }

    void u32(std::uint32_t v) { raw(&v, 4); }

    void finish() {
        out_.flush();
        if (!out_) throw FormatError(path_ + ": write failed");
    }

private:
    std::ofstream out_;
    std::string path_;
};

} // namespace edm::detail
