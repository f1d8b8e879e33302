#include "intopic/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "intopic/error.hpp"
#include "intopic/eval.hpp"

namespace intopic {

namespace {

std::string_view trim(std::string_view s)
{
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view text, std::size_t line)
{
    T value{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ParseError("bad value for '" + std::string(key) + "': " + std::string(text), line);
    }
    return value;
}

bool parse_bool(std::string_view key, std::string_view text, std::size_t line)
{
    if (text == "true" || text == "1") {
        return true;
    }
    if (text == "false" || text == "0") {
        return false;
    }
    throw ParseError("bad value for '" + std::string(key) + "': " + std::string(text), line);
}

}  // namespace

EtmConfig parse_config(std::istream& in, EtmConfig base)
{
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string_view text = raw;
        if (auto hash = text.find('#'); hash != std::string_view::npos) {
            text = text.substr(0, hash);
        }
        text = trim(text);
        if (text.empty()) {
            continue;
        }
        auto eq = text.find('=');
        if (eq == std::string_view::npos) {
            throw ParseError("expected key = value", line);
        }
        auto key = trim(text.substr(0, eq));
        auto value = trim(text.substr(eq + 1));
        if (key == "topics") {
            base.topics = parse_number<int>(key, value, line);
        } else if (key == "embedding_dim") {
            base.embedding_dim = parse_number<int>(key, value, line);
        } else if (key == "hidden") {
            base.hidden = parse_number<int>(key, value, line);
        } else if (key == "lr") {
            base.lr = parse_number<double>(key, value, line);
        } else if (key == "epochs") {
            base.epochs = parse_number<int>(key, value, line);
        } else if (key == "batch_size") {
            base.batch_size = parse_number<int>(key, value, line);
        } else if (key == "seed") {
            base.seed = parse_number<std::uint64_t>(key, value, line);
        } else if (key == "train_rho") {
            base.train_rho = parse_bool(key, value, line);
        } else if (key == "lambda_default") {
            base.lambda_default = parse_number<double>(key, value, line);
        } else {
            throw ParseError("unknown config key '" + std::string(key) + "'", line);
        }
    }
    return base;
}

EtmConfig load_config(std::filesystem::path const& path, EtmConfig base)
{
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open config " + path.string());
    }
    return parse_config(in, base);
}

void write_config(EtmConfig const& c, std::ostream& out)
{
    out << "topics = " << c.topics << '\n'
        << "embedding_dim = " << c.embedding_dim << '\n'
        << "hidden = " << c.hidden << '\n'
        << "lr = " << format_double(c.lr) << '\n'
        << "epochs = " << c.epochs << '\n'
        << "batch_size = " << c.batch_size << '\n'
        << "seed = " << c.seed << '\n'
        << "train_rho = " << (c.train_rho ? "true" : "false") << '\n'
        << "lambda_default = " << format_double(c.lambda_default) << '\n';
}

std::optional<std::filesystem::path> resolve_config_path(std::optional<std::filesystem::path> explicit_path)
{
    if (explicit_path) {
        return explicit_path;
    }
    if (char const* env = std::getenv("INTOPIC_CONFIG"); env != nullptr && *env != '\0') {
        return std::filesystem::path(env);
    }
    return std::nullopt;
}

}  // namespace intopic
