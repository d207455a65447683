#include "edm/dataset.hpp"

#include "binio.hpp"

namespace edm {
namespace {

using detail::Reader;
using detail::Writer;

Tensor read_tensor_record(Reader& r) {
    std::uint32_t rank = r.u32("rank");
    if (rank > 8)
        throw FormatError(r.path() + ": implausible rank " + std::to_string(rank) +
                          " at byte offset " + std::to_string(r.offset() - 4));
    std::vector<std::size_t> shape(rank);
    std::size_t n = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
        std::uint32_t d = r.u32("dims");
        if (d == 0)
            throw FormatError(r.path() + ": zero dimension at byte offset " +
                              std::to_string(r.offset() - 4));
        shape[i] = d;
        n *= d;
    }
    std::vector<double> data(n);
    r.raw(data.data(), n * sizeof(double), "payload");
    return Tensor(std::move(shape), std::move(data));
}

void write_tensor_record(Writer& w, const Tensor& t) {
    w.u32(static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) w.u32(static_cast<std::uint32_t>(d));
    w.raw(t.data().data(), t.size() * sizeof(double));
}

} // namespace

Tensor tensor_load(const std::string& path) {
    Reader r(path);
    r.magic("EDMT");
    r.version(1);
    return read_tensor_record(r);
}

void tensor_save(const Tensor& t, const std::string& path) {
    Writer w(path);
    w.raw("EDMT", 4);
    w.u32(1);
    write_tensor_record(w, t);
    w.finish();
}

Dataset dataset_load(const std::string& path) {
    Reader r(path);
    r.magic("EDMD");
    r.version(1);
    std::uint32_t count = r.u32("count");
    if (count == 0) throw FormatError(path + ": empty dataset at byte offset 8");
    std::vector<Tensor> samples;
    samples.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        samples.push_back(read_tensor_record(r));
        if (!samples.back().same_shape(samples.front()))
            throw FormatError(path + ": sample shape mismatch at byte offset " +
                              std::to_string(r.offset()));
    }
    return Dataset(std::move(samples), path);
}

void dataset_save(const Dataset& d, const std::string& path) {
    d.validate();
    Writer w(path);
    w.raw("EDMD", 4);
    w.u32(1);
    w.u32(static_cast<std::uint32_t>(d.samples.size()));
    for (const Tensor& t : d.samples) write_tensor_record(w, t);
    w.finish();
}

} // namespace edm
