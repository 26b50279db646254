#include "hypertab/model.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "hypertab/error.hpp"

namespace hypertab {

namespace {

void check_consistency(const HyperNetwork& hn, const MaskPool& pool, const Standardization& st) {
    if (pool.feature_count() != hn.feature_count()) {
        throw InconsistentModelError("model: masks cover " + std::to_string(pool.feature_count()) +
                                     " features, hypernetwork input is " + std::to_string(hn.feature_count()));
    }
    if (pool.mask_size() != hn.mask_size()) {
        throw InconsistentModelError("model: masks select " + std::to_string(pool.mask_size()) +
                                     " features, target input is " + std::to_string(hn.mask_size()));
    }
    if (st.mean.size() != hn.feature_count() || st.stddev.size() != hn.feature_count()) {
        throw InconsistentModelError("model: standardization vectors do not match the feature count");
    }
    for (double s : st.stddev) {
        if (!(s > 0.0)) throw InconsistentModelError("model: standard deviations must be positive");
    }
}

}  // namespace

HyperTabModel::HyperTabModel(HyperNetwork hypernet, const MaskPool& pool, Standardization standardization,
                             std::vector<std::string> class_names)
    : hn_(std::move(hypernet)),
      pool_(pool.canonical()),
      st_(std::move(standardization)),
      class_names_(std::move(class_names)) {
    check_consistency(hn_, pool_, st_);
    if (!class_names_.empty() && class_names_.size() != hn_.class_count()) {
        throw InconsistentModelError("model: " + std::to_string(class_names_.size()) + " class names for " +
                                     std::to_string(hn_.class_count()) + " classes");
    }
    thetas_ = generate_batch(hn_, pool_.masks());
}

int argmax(std::span<const double> values) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) best = i;
    }
    return static_cast<int>(best);
}

namespace {

Matrix mean_logits(const HyperNetwork& hn, const MaskPool& pool, const Matrix& thetas, ConstMatrixView z) {
    Matrix sum(z.rows(), hn.class_count());
    for (std::size_t j = 0; j < pool.size(); ++j) {
        Matrix logits = mlp::predict(hn.target_spec, thetas.row(j), apply_mask(z, pool[j]));
        for (std::size_t i = 0; i < sum.size(); ++i) sum.data()[i] += logits.data()[i];
    }
    const double inv = 1.0 / static_cast<double>(pool.size());
    for (std::size_t i = 0; i < sum.size(); ++i) sum.data()[i] *= inv;
    return sum;
}

}  // namespace

Matrix HyperTabModel::predict_logits(ConstMatrixView x) const {
    if (x.cols() != feature_count()) {
        throw ContractError("predict: sample has " + std::to_string(x.cols()) + " features, model expects " +
                            std::to_string(feature_count()));
    }
    return mean_logits(hn_, pool_, thetas_, standardize_apply(x, st_));
}

Vector HyperTabModel::predict_logits(std::span<const double> x) const {
    return predict_logits(ConstMatrixView(x.data(), 1, x.size())).values();
}

Matrix HyperTabModel::predict_logits_uncached(ConstMatrixView x) const {
    if (x.cols() != feature_count()) throw ContractError("predict: feature count mismatch");
    Matrix thetas(pool_.size(), hn_.target_spec.param_count());
    for (std::size_t j = 0; j < pool_.size(); ++j) {
        auto g = generate(hn_, pool_[j]);
        std::copy(g.theta.begin(), g.theta.end(), thetas.row(j).begin());
    }
    return mean_logits(hn_, pool_, thetas, standardize_apply(x, st_));
}

int HyperTabModel::predict_class(std::span<const double> x) const { return argmax(predict_logits(x)); }

Labels HyperTabModel::predict_classes(ConstMatrixView x) const {
    Matrix logits = predict_logits(x);
    Labels out(logits.rows());
    for (std::size_t i = 0; i < logits.rows(); ++i) out[i] = argmax(logits.row(i));
    return out;
}

std::vector<Matrix> HyperTabModel::per_target_logits(ConstMatrixView x) const {
    if (x.cols() != feature_count()) throw ContractError("predict: feature count mismatch");
    Matrix z = standardize_apply(x, st_);
    std::vector<Matrix> out;
    out.reserve(pool_.size());
    for (std::size_t j = 0; j < pool_.size(); ++j) {
        out.push_back(mlp::predict(hn_.target_spec, thetas_.row(j), apply_mask(z, pool_[j])));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr unsigned char kMagic[4] = {'H', 'T', 'A', 'B'};

class Writer {
public:
    void bytes(const void* p, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        buf_.insert(buf_.end(), b, b + n);
    }
    template <typename T>
    void le(T v) {
        static_assert(std::is_integral_v<T>);
        for (std::size_t i = 0; i < sizeof(T); ++i) buf_.push_back(static_cast<unsigned char>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) { le(v); }
    void f64(double v) { le(std::bit_cast<std::uint64_t>(v)); }
    void sizes(const std::vector<std::size_t>& s) {
        u64(s.size());
        for (auto v : s) u64(v);
    }
    void doubles(std::span<const double> v) {
        u64(v.size());
        for (double x : v) f64(x);
    }
    void strings(const std::vector<std::string>& v) {
        u64(v.size());
        for (const auto& s : v) {
            u64(s.size());
            bytes(s.data(), s.size());
        }
    }
    std::vector<unsigned char>& buffer() { return buf_; }

private:
    std::vector<unsigned char> buf_;
};

class Reader {
public:
    explicit Reader(std::span<const unsigned char> bytes) : bytes_(bytes) {}

    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) throw CorruptFileError("model file is truncated");
    }
    template <typename T>
    T le() {
        need(sizeof(T));
        T v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(bytes_[pos_ + i]) << (8 * i));
        pos_ += sizeof(T);
        return v;
    }
    std::uint64_t u64() { return le<std::uint64_t>(); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::uint64_t count(std::size_t element_size) {
        const std::uint64_t n = u64();
        if (n > (bytes_.size() - pos_) / element_size) throw CorruptFileError("model file is truncated");
        return n;
    }
    std::vector<std::size_t> sizes() {
        const auto n = count(8);
        std::vector<std::size_t> out(n);
        for (auto& v : out) v = u64();
        return out;
    }
    Vector doubles() {
        const auto n = count(8);
        Vector out(n);
        for (auto& v : out) v = f64();
        return out;
    }
    std::vector<std::string> strings() {
        const auto n = count(8);
        std::vector<std::string> out(n);
        for (auto& s : out) {
            const auto len = count(1);
            s.assign(reinterpret_cast<const char*>(bytes_.data() + pos_), len);
            pos_ += len;
        }
        return out;
    }
    std::size_t position() const { return pos_; }

private:
    std::span<const unsigned char> bytes_;
    std::size_t pos_ = 0;
};

std::uint64_t fnv1a(std::span<const unsigned char> bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

mlp::MlpSpec read_spec(Reader& r, const char* what) {
    auto sizes = r.sizes();
    try {
        return mlp::MlpSpec(std::move(sizes));
    } catch (const ContractError& e) {
        throw CorruptFileError(std::string("model file: invalid ") + what + " spec: " + e.what());
    }
}

}  // namespace

std::vector<unsigned char> serialize(const HyperTabModel& model) {
    const auto& hn = model.hypernetwork();
    Writer w;
    w.bytes(kMagic, sizeof(kMagic));
    w.le<std::uint32_t>(kModelFormatVersion);
    w.sizes(hn.hyper_spec.layer_sizes());
    w.sizes(hn.target_spec.layer_sizes());
    w.doubles(hn.psi);
    w.u64(model.pool().size());
    w.u64(model.pool().mask_size());
    w.u64(model.pool().feature_count());
    for (const auto& m : model.pool().masks()) {
        for (auto idx : m.indices()) w.u64(idx);
    }
    w.doubles(model.standardization().mean);
    w.doubles(model.standardization().stddev);
    w.strings(model.class_names());
    w.u64(fnv1a(w.buffer()));
    return std::move(w.buffer());
}

HyperTabModel deserialize(std::span<const unsigned char> bytes) {
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
        throw CorruptFileError("not a HyperTab model file (bad magic)");
    }
    Reader r(bytes);
    r.need(4);
    for (int i = 0; i < 4; ++i) r.le<std::uint8_t>();
    const auto version = r.le<std::uint32_t>();
    if (version != kModelFormatVersion) {
        throw VersionMismatchError("model file format version " + std::to_string(version) + ", expected " +
                                   std::to_string(kModelFormatVersion));
    }
    if (bytes.size() < 16) throw CorruptFileError("model file is truncated");
    const auto body = bytes.first(bytes.size() - 8);
    std::uint64_t stored = 0;
    for (int i = 0; i < 8; ++i) stored |= static_cast<std::uint64_t>(bytes[bytes.size() - 8 + i]) << (8 * i);
    if (fnv1a(body) != stored) throw CorruptFileError("model file checksum mismatch (truncated or damaged)");

    Reader br(body);
    for (int i = 0; i < 8; ++i) br.le<std::uint8_t>();
    auto hyper_spec = read_spec(br, "hypernetwork");
    auto target_spec = read_spec(br, "target");
    Vector psi = br.doubles();
    const auto pool_size = br.u64();
    const auto mask_size = br.u64();
    const auto mask_d = br.u64();
    if (pool_size == 0 || mask_size == 0) throw CorruptFileError("model file: empty mask pool");
    if (mask_size > (body.size() - br.position()) / 8 / pool_size) throw CorruptFileError("model file is truncated");
    std::vector<AugmentationMask> masks;
    masks.reserve(pool_size);
    for (std::uint64_t k = 0; k < pool_size; ++k) {
        std::vector<std::size_t> idx(mask_size);
        for (auto& v : idx) v = br.u64();
        try {
            masks.emplace_back(std::move(idx), mask_d);
        } catch (const ContractError& e) {
            throw CorruptFileError(std::string("model file: invalid mask: ") + e.what());
        }
    }
    Standardization st;
    st.mean = br.doubles();
    st.stddev = br.doubles();
    auto class_names = br.strings();
    if (br.position() != body.size()) throw CorruptFileError("model file has trailing bytes");

    if (hyper_spec.output_size() != target_spec.param_count() || psi.size() != hyper_spec.param_count()) {
        throw InconsistentModelError("model file: hypernetwork and target shapes disagree");
    }
    if (mask_d != hyper_spec.input_size()) {
        throw InconsistentModelError("model file: masks cover " + std::to_string(mask_d) +
                                     " features, hypernetwork input is " + std::to_string(hyper_spec.input_size()));
    }
    if (mask_size != target_spec.input_size()) {
        throw InconsistentModelError("model file: mask size differs from the target input size");
    }
    auto hn = HyperNetwork{std::move(hyper_spec), std::move(psi), std::move(target_spec)};
    if (!class_names.empty() && class_names.size() != hn.class_count()) {
        throw InconsistentModelError("model file: class name count differs from the target output size");
    }
    return HyperTabModel(std::move(hn), MaskPool(std::move(masks)), std::move(st), std::move(class_names));
}

void save(const HyperTabModel& model, const std::filesystem::path& path) {
    const auto bytes = serialize(model);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write model file '" + path.string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("failed writing model file '" + path.string() + "'");
}

HyperTabModel load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open model file '" + path.string() + "'");
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize(bytes);
}

}  // namespace hypertab
