#include "ldmaps/model_io.hpp"

#include "ldmaps/error.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

namespace ldmaps {

namespace {

constexpr int kVersion = 1;

static_assert(std::endian::native == std::endian::little, "model files assume a little-endian host");

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

class Writer {
public:
    template <typename T>
    void pod(T v) {
        buf_.append(reinterpret_cast<const char*>(&v), sizeof(T));
    }
    void vector(const Eigen::VectorXd& v) {
        pod<std::uint64_t>(static_cast<std::uint64_t>(v.size()));
        buf_.append(reinterpret_cast<const char*>(v.data()), sizeof(double) * static_cast<std::size_t>(v.size()));
    }
    template <typename Mat>
    void matrix(const Mat& m) {
        pod<std::uint64_t>(static_cast<std::uint64_t>(m.rows()));
        pod<std::uint64_t>(static_cast<std::uint64_t>(m.cols()));
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j) pod<double>(m(i, j));
    }
    const std::string& bytes() const { return buf_; }

private:
    std::string buf_;
};

class Reader {
public:
    explicit Reader(const std::string& buf) : buf_(buf) {}

    template <typename T>
    T pod() {
        if (pos_ + sizeof(T) > buf_.size()) throw ParseError("model file is truncated", 0);
        T v;
        std::memcpy(&v, buf_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    Eigen::Index extent() {
        const auto n = pod<std::uint64_t>();
        if (n > (buf_.size() - pos_) / sizeof(double) + 1) throw ParseError("model file has an implausible size", 0);
        return static_cast<Eigen::Index>(n);
    }
    Eigen::VectorXd vector() {
        Eigen::VectorXd v(extent());
        for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = pod<double>();
        return v;
    }
    template <typename Mat>
    Mat matrix() {
        const Eigen::Index r = extent();
        const Eigen::Index c = extent();
        if (r > 0 && static_cast<std::size_t>(c) > (buf_.size() - pos_) / sizeof(double) / static_cast<std::size_t>(r))
            throw ParseError("model file has an implausible size", 0);
        Mat m(r, c);
        for (Eigen::Index i = 0; i < r; ++i)
            for (Eigen::Index j = 0; j < c; ++j) m(i, j) = pod<double>();
        return m;
    }
    bool done() const { return pos_ == buf_.size(); }

private:
    const std::string& buf_;
    std::size_t pos_ = 0;
};

void write_common(Writer& w, double epsilon, int k, Metric metric, const std::optional<int>& atoms) {
    w.pod<double>(epsilon);
    w.pod<std::int32_t>(k);
    w.pod<std::uint8_t>(metric == Metric::euclidean ? 0 : 1);
    w.pod<std::int32_t>(atoms.value_or(-1));
}

template <typename M>
void read_common(Reader& r, M& m) {
    m.epsilon = r.pod<double>();
    m.k = r.pod<std::int32_t>();
    const auto metric = r.pod<std::uint8_t>();
    if (metric > 1) throw ParseError("model file has an unknown metric", 0);
    m.metric = metric == 0 ? Metric::euclidean : Metric::aligned_rmsd;
    const auto atoms = r.pod<std::int32_t>();
    if (atoms > 0) m.atoms_per_frame = atoms;
    if (!(m.epsilon > 0.0) || m.k < 1) throw ParseError("model file has invalid parameters", 0);
}

}  // namespace

void write_model(const Model& model, std::ostream& os) {
    Writer w;
    const char* kind = nullptr;
    if (const auto* full = std::get_if<DiffusionModel>(&model)) {
        kind = "full";
        write_common(w, full->epsilon, full->k, full->metric, full->atoms_per_frame);
        w.vector(full->eigenvalues);
        w.matrix(full->eigenvectors);
        w.vector(full->D);
        w.matrix(full->training_points);
    } else {
        const auto& lm = std::get<LandmarkModel>(model);
        kind = "landmark";
        write_common(w, lm.epsilon, lm.k, lm.metric, lm.atoms_per_frame);
        w.vector(lm.eigenvalues);
        w.matrix(lm.eigenvectors);
        w.vector(lm.Dtilde);
        w.vector(lm.multiplicities);
        w.matrix(lm.landmark_points);
    }
    os << "LDMM " << kVersion << ' ' << kind << '\n';
    const auto& bytes = w.bytes();
    const std::uint64_t n = bytes.size();
    const std::uint64_t sum = fnv1a(bytes);
    os.write(reinterpret_cast<const char*>(&n), sizeof n);
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    os.write(reinterpret_cast<const char*>(&sum), sizeof sum);
    if (!os) throw IoError("failed to write model");
}

Model read_model(std::istream& is) {
    std::string header;
    if (!std::getline(is, header)) throw ParseError("empty model file", 1);
    std::istringstream hs(header);
    std::string magic, kind;
    int version = 0;
    if (!(hs >> magic >> version >> kind) || magic != "LDMM") throw ParseError("not an ldmaps model file", 1);
    if (version != kVersion) throw ParseError("unsupported model version " + std::to_string(version), 1);
    if (kind != "full" && kind != "landmark") throw ParseError("unknown model kind '" + kind + "'", 1);

    std::uint64_t n = 0;
    if (!is.read(reinterpret_cast<char*>(&n), sizeof n)) throw ParseError("model file is truncated", 0);
    if (n > (std::uint64_t{1} << 40)) throw ParseError("model file has an implausible size", 0);
    std::string bytes(static_cast<std::size_t>(n), '\0');
    std::uint64_t sum = 0;
    if (!is.read(bytes.data(), static_cast<std::streamsize>(n)) || !is.read(reinterpret_cast<char*>(&sum), sizeof sum))
        throw ParseError("model file is truncated", 0);
    if (fnv1a(bytes) != sum) throw ParseError("model checksum mismatch", 0);

    Reader r(bytes);
    Model out;
    if (kind == "full") {
        DiffusionModel m;
        read_common(r, m);
        m.eigenvalues = r.vector();
        m.eigenvectors = r.matrix<Eigen::MatrixXd>();
        m.D = r.vector();
        m.training_points = r.matrix<RowMatrix>();
        const auto N = m.training_points.rows();
        if (m.eigenvalues.size() != m.k + 1 || m.eigenvectors.rows() != N || m.eigenvectors.cols() != m.k + 1 ||
            m.D.size() != N)
            throw ParseError("model file has inconsistent shapes", 0);
        out = std::move(m);
    } else {
        LandmarkModel m;
        read_common(r, m);
        m.eigenvalues = r.vector();
        m.eigenvectors = r.matrix<Eigen::MatrixXd>();
        m.Dtilde = r.vector();
        m.multiplicities = r.vector();
        m.landmark_points = r.matrix<RowMatrix>();
        const auto M = m.landmark_points.rows();
        if (m.eigenvalues.size() != m.k + 1 || m.eigenvectors.rows() != M || m.eigenvectors.cols() != m.k + 1 ||
            m.Dtilde.size() != M || m.multiplicities.size() != M)
            throw ParseError("model file has inconsistent shapes", 0);
        out = std::move(m);
    }
    if (!r.done()) throw ParseError("model file has trailing data", 0);
    return out;
}

void save_model(const Model& model, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
    write_model(model, os);
}

Model load_model(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open '" + path.string() + "'");
    return read_model(is);
}

}  // namespace ldmaps
