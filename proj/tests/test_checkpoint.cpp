#include <doctest.h>

#include <fstream>
#include <sstream>

#include "intopic/checkpoint.hpp"
#include "intopic/error.hpp"
#include "support.hpp"

using namespace intopic;

namespace {

EtmModel small_model()
{
    SyntheticOptions so;
    so.docs = 40;
    so.seed = 2;
    auto pl = support::planted(so, 8);
    EtmConfig c;
    c.topics = 3;
    c.embedding_dim = 8;
    c.hidden = 6;
    c.epochs = 3;
    c.batch_size = 16;
    c.seed = 99;
    c.lambda_default = 0.25;
    return train(pl.bow, pl.rho, c);
}

std::string bytes_of(EtmModel const& m)
{
    std::ostringstream out(std::ios::binary);
    write_model(m, out);
    return out.str();
}

}  // namespace

TEST_CASE("save then load restores every field")
{
    auto m = small_model();
    support::TempDir dir("ckpt");
    save_model(m, dir / "m.ckpt");
    auto back = load_model(dir / "m.ckpt");
    CHECK(back.config == m.config);
    CHECK(back.vocab.words() == m.vocab.words());
    CHECK(back.vocab.doc_freq() == m.vocab.doc_freq());
    CHECK(back.params.rho == m.params.rho);
    CHECK(back.params.alpha == m.params.alpha);
    CHECK(back.params.encoder.w_in == m.params.encoder.w_in);
    CHECK(back.params.encoder.b_in == m.params.encoder.b_in);
    CHECK(back.params.encoder.w_mu == m.params.encoder.w_mu);
    CHECK(back.params.encoder.b_mu == m.params.encoder.b_mu);
    CHECK(back.params.encoder.w_logvar == m.params.encoder.w_logvar);
    CHECK(back.params.encoder.b_logvar == m.params.encoder.b_logvar);
    CHECK(back.loss_curve == m.loss_curve);
    CHECK(back.beta == m.beta);
    CHECK(back.beta == compute_beta(m.params));
    CHECK(bytes_of(back) == bytes_of(m));
}

TEST_CASE("header layout is little-endian with magic and version")
{
    auto bytes = bytes_of(small_model());
    REQUIRE(bytes.size() > 8);
    CHECK(bytes.substr(0, 4) == "ITMC");
    CHECK(static_cast<unsigned char>(bytes[4]) == 1);
    CHECK(bytes[5] == 0);
    CHECK(bytes[6] == 0);
    CHECK(bytes[7] == 0);
}

TEST_CASE("corrupt or truncated checkpoints are rejected")
{
    auto bytes = bytes_of(small_model());

    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    std::istringstream in1(bad_magic, std::ios::binary);
    CHECK_THROWS_AS(read_model(in1), FormatError);

    auto bad_version = bytes;
    bad_version[4] = 7;
    std::istringstream in2(bad_version, std::ios::binary);
    CHECK_THROWS_AS(read_model(in2), FormatError);

    for (std::size_t cut : {std::size_t{3}, std::size_t{20}, bytes.size() / 2, bytes.size() - 1}) {
        std::istringstream in(bytes.substr(0, cut), std::ios::binary);
        CHECK_THROWS_AS(read_model(in), FormatError);
    }

    CHECK_THROWS_AS(load_model("/nonexistent/model.ckpt"), Error);
}
