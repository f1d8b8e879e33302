#include "intopic/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "intopic/error.hpp"

namespace intopic {

namespace {

class Writer {
  public:
    explicit Writer(std::ostream& out) : m_out(out) {}

    void u8(std::uint8_t v) { m_out.put(static_cast<char>(v)); }
    void u32(std::uint32_t v) { le(v, 4); }
    void u64(std::uint64_t v) { le(v, 8); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void bytes(char const* p, std::size_t n) { m_out.write(p, static_cast<std::streamsize>(n)); }

    void matrix(double const* data, Eigen::Index rows, Eigen::Index cols)
    {
        u64(static_cast<std::uint64_t>(rows));
        u64(static_cast<std::uint64_t>(cols));
        for (Eigen::Index i = 0; i < rows * cols; ++i) {
            f64(data[i]);
        }
    }

  private:
    void le(std::uint64_t v, int n)
    {
        for (int i = 0; i < n; ++i) {
            m_out.put(static_cast<char>((v >> (8 * i)) & 0xffU));
        }
    }

    std::ostream& m_out;
};

class Reader {
  public:
    explicit Reader(std::istream& in) : m_in(in) {}

    std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
    std::uint64_t u64() { return le(8); }
    double f64() { return std::bit_cast<double>(u64()); }

    void bytes(char* p, std::size_t n)
    {
        m_in.read(p, static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(m_in.gcount()) != n) {
            throw FormatError("checkpoint truncated");
        }
    }

    Matrix matrix(char const* name, Eigen::Index rows, Eigen::Index cols)
    {
        auto r = u64();
        auto c = u64();
        if (r != static_cast<std::uint64_t>(rows) || c != static_cast<std::uint64_t>(cols)) {
            throw FormatError(std::string("checkpoint: unexpected shape for ") + name);
        }
        Matrix m(rows, cols);
        for (Eigen::Index i = 0; i < rows * cols; ++i) {
            m.data()[i] = f64();
        }
        return m;
    }

    Vector vector(char const* name, Eigen::Index n)
    {
        Matrix m = matrix(name, n, 1);
        return Vector(Eigen::Map<Vector>(m.data(), n));
    }

  private:
    std::uint64_t le(int n)
    {
        std::array<unsigned char, 8> buf{};
        bytes(reinterpret_cast<char*>(buf.data()), static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) {
            v |= static_cast<std::uint64_t>(buf[static_cast<std::size_t>(i)]) << (8 * i);
        }
        return v;
    }

    std::istream& m_in;
};

// Sanity bound on dimensions read from disk.
constexpr std::uint64_t kMaxDim = 1u << 26;

std::uint32_t checked_dim(std::uint64_t v, char const* what)
{
    if (v == 0 || v > kMaxDim) {
        throw FormatError(std::string("checkpoint: implausible ") + what);
    }
    return static_cast<std::uint32_t>(v);
}

}  // namespace

void write_model(EtmModel const& model, std::ostream& out)
{
    Writer w(out);
    auto const& c = model.config;
    auto const& p = model.params;
    w.bytes(kCheckpointMagic, 4);
    w.u32(kCheckpointVersion);
    w.u32(static_cast<std::uint32_t>(c.topics));
    w.u32(static_cast<std::uint32_t>(c.embedding_dim));
    w.u32(static_cast<std::uint32_t>(c.hidden));
    w.f64(c.lr);
    w.u32(static_cast<std::uint32_t>(c.epochs));
    w.u32(static_cast<std::uint32_t>(c.batch_size));
    w.u64(c.seed);
    w.u8(c.train_rho ? 1 : 0);
    w.f64(c.lambda_default);
    w.u64(static_cast<std::uint64_t>(p.rho.rows()));

    w.matrix(p.rho.data(), p.rho.rows(), p.rho.cols());
    w.matrix(p.alpha.data(), p.alpha.rows(), p.alpha.cols());
    w.matrix(p.encoder.w_in.data(), p.encoder.w_in.rows(), p.encoder.w_in.cols());
    w.matrix(p.encoder.b_in.data(), p.encoder.b_in.size(), 1);
    w.matrix(p.encoder.w_mu.data(), p.encoder.w_mu.rows(), p.encoder.w_mu.cols());
    w.matrix(p.encoder.b_mu.data(), p.encoder.b_mu.size(), 1);
    w.matrix(p.encoder.w_logvar.data(), p.encoder.w_logvar.rows(), p.encoder.w_logvar.cols());
    w.matrix(p.encoder.b_logvar.data(), p.encoder.b_logvar.size(), 1);

    w.u64(model.vocab.size());
    for (std::size_t i = 0; i < model.vocab.size(); ++i) {
        auto const& word = model.vocab.word(i);
        w.u32(static_cast<std::uint32_t>(word.size()));
        w.bytes(word.data(), word.size());
        w.f64(model.vocab.doc_freq()[i]);
    }
    w.u64(model.loss_curve.size());
    for (double x : model.loss_curve) {
        w.f64(x);
    }
    if (!out) {
        throw Error("checkpoint: write failed");
    }
}

EtmModel read_model(std::istream& in)
{
    Reader r(in);
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, kCheckpointMagic, 4) != 0) {
        throw FormatError("checkpoint: bad magic bytes");
    }
    auto version = r.u32();
    if (version != kCheckpointVersion) {
        throw FormatError("checkpoint: unsupported version " + std::to_string(version));
    }
    EtmModel m;
    auto& c = m.config;
    c.topics = static_cast<int>(checked_dim(r.u32(), "topic count"));
    c.embedding_dim = static_cast<int>(checked_dim(r.u32(), "embedding dimension"));
    c.hidden = static_cast<int>(checked_dim(r.u32(), "hidden width"));
    c.lr = r.f64();
    c.epochs = static_cast<int>(r.u32());
    c.batch_size = static_cast<int>(r.u32());
    c.seed = r.u64();
    c.train_rho = r.u8() != 0;
    c.lambda_default = r.f64();
    auto const v = static_cast<Eigen::Index>(checked_dim(r.u64(), "vocabulary size"));
    auto const k = static_cast<Eigen::Index>(c.topics);
    auto const l = static_cast<Eigen::Index>(c.embedding_dim);
    auto const h = static_cast<Eigen::Index>(c.hidden);

    auto& p = m.params;
    p.rho = r.matrix("rho", v, l);
    p.alpha = r.matrix("alpha", k, l);
    p.encoder.w_in = r.matrix("w_in", v, h);
    p.encoder.b_in = r.vector("b_in", h);
    p.encoder.w_mu = r.matrix("w_mu", k, h);
    p.encoder.b_mu = r.vector("b_mu", k);
    p.encoder.w_logvar = r.matrix("w_logvar", k, h);
    p.encoder.b_logvar = r.vector("b_logvar", k);

    auto nwords = r.u64();
    if (nwords != static_cast<std::uint64_t>(v)) {
        throw FormatError("checkpoint: vocabulary size mismatch");
    }
    std::vector<std::string> words;
    std::vector<double> dfs;
    for (std::uint64_t i = 0; i < nwords; ++i) {
        auto len = r.u32();
        if (len > (1u << 20)) {
            throw FormatError("checkpoint: implausible word length");
        }
        std::string word(len, '\0');
        r.bytes(word.data(), len);
        words.push_back(std::move(word));
        dfs.push_back(r.f64());
    }
    try {
        m.vocab = Vocabulary(std::move(words), std::move(dfs));
    } catch (InvalidArgument const& e) {
        throw FormatError(std::string("checkpoint: ") + e.what());
    }
    auto n = r.u64();
    if (n > kMaxDim) {
        throw FormatError("checkpoint: implausible loss curve length");
    }
    for (std::uint64_t i = 0; i < n; ++i) {
        m.loss_curve.push_back(r.f64());
    }
    m.beta = compute_beta(p);
    return m;
}

void save_model(EtmModel const& model, std::filesystem::path const& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write checkpoint " + path.string());
    }
    write_model(model, out);
}

EtmModel load_model(std::filesystem::path const& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open checkpoint " + path.string());
    }
    return read_model(in);
}

}  // namespace intopic
