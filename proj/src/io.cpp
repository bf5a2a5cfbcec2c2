#include "fracdec/io.hpp"

#include <fstream>
#include <sstream>

namespace fracdec {

namespace {

VertexId parse_vertex(const std::string& token, int line_no) {
    auto colon = token.find(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == token.size())
        throw ParseError("line " + std::to_string(line_no) + ": bad vertex token '" + token + "'");
    try {
        std::size_t used = 0;
        int cls = std::stoi(token.substr(0, colon), &used);
        if (used != colon) throw std::invalid_argument("");
        std::string off_s = token.substr(colon + 1);
        int off = std::stoi(off_s, &used);
        if (used != off_s.size()) throw std::invalid_argument("");
        return {cls, off};
    } catch (const std::exception&) {
        throw ParseError("line " + std::to_string(line_no) + ": bad vertex token '" + token + "'");
    }
}

} // namespace

void write_graph(std::ostream& out, const PartiteGraph& g) {
    out << "pg " << g.part_count() << " " << g.part_size() << "\n";
    g.for_each_edge([&](VertexId a, VertexId b) {
        out << a.cls << ":" << a.off << " " << b.cls << ":" << b.off << "\n";
    });
}

PartiteGraph read_graph(std::istream& in) {
    std::string line;
    int line_no = 0;
    if (!std::getline(in, line)) throw ParseError("empty graph file");
    ++line_no;
    std::istringstream header(line);
    std::string magic;
    int r = 0, n = 0;
    if (!(header >> magic >> r >> n) || magic != "pg")
        throw ParseError("line 1: expected header 'pg <r> <n>'");
    std::string extra;
    if (header >> extra) throw ParseError("line 1: trailing content after header");
    if (r < 3 || n < 1) throw ParseError("line 1: invalid dimensions r=" + std::to_string(r) +
                                         " n=" + std::to_string(n));
    PartiteGraph g(r, n);
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string ta, tb;
        if (!(ls >> ta >> tb)) throw ParseError("line " + std::to_string(line_no) + ": expected two vertices");
        if (ls >> extra) throw ParseError("line " + std::to_string(line_no) + ": trailing content");
        VertexId a = parse_vertex(ta, line_no);
        VertexId b = parse_vertex(tb, line_no);
        if (!g.valid(a) || !g.valid(b))
            throw ParseError("line " + std::to_string(line_no) + ": vertex id out of range");
        if (a.cls == b.cls)
            throw ParseError("line " + std::to_string(line_no) + ": intra-class edge");
        if (a.cls > b.cls)
            throw ParseError("line " + std::to_string(line_no) + ": classes must be ordered ci < cj");
        if (!g.add_edge(a, b))
            throw ParseError("line " + std::to_string(line_no) + ": duplicate edge");
    }
    return g;
}

void write_graph_file(const std::string& path, const PartiteGraph& g) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    write_graph(out, g);
    if (!out) throw IoError("write to '" + path + "' failed");
}

PartiteGraph read_graph_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    return read_graph(in);
}

void write_weighting(std::ostream& out, const CliqueWeighting<Rational>& w) {
    const CliqueIndex& idx = w.host();
    for (CliqueId c = 0; c < idx.k_total(); ++c) {
        if (w[c].is_zero()) continue;
        for (VertexId v : idx.clique(c)) out << v.cls << ":" << v.off << " ";
        out << numerator(w[c]) << "/" << denominator(w[c]) << "\n";
    }
}

CliqueWeighting<Rational> read_weighting(std::istream& in, const CliqueIndex& idx) {
    CliqueWeighting<Rational> w(idx);
    std::vector<bool> seen(static_cast<std::size_t>(idx.k_total()), false);
    const int r = idx.r();
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::vector<VertexId> tuple(r);
        std::string token;
        for (int i = 0; i < r; ++i) {
            if (!(ls >> token))
                throw ParseError("line " + std::to_string(line_no) + ": expected " +
                                 std::to_string(r) + " vertices");
            tuple[i] = parse_vertex(token, line_no);
        }
        if (!(ls >> token)) throw ParseError("line " + std::to_string(line_no) + ": missing value");
        std::string extra;
        if (ls >> extra) throw ParseError("line " + std::to_string(line_no) + ": trailing content");
        auto slash = token.find('/');
        if (slash == std::string::npos || slash == 0 || slash + 1 == token.size())
            throw ParseError("line " + std::to_string(line_no) + ": value must be <num>/<den>");
        Rational value;
        try {
            boost::multiprecision::mpz_int num(token.substr(0, slash));
            boost::multiprecision::mpz_int den(token.substr(slash + 1));
            if (den.is_zero())
                throw ParseError("line " + std::to_string(line_no) + ": zero denominator");
            value = Rational(num, den);
        } catch (const ParseError&) {
            throw;
        } catch (const std::exception&) {
            throw ParseError("line " + std::to_string(line_no) + ": bad rational '" + token + "'");
        }
        CliqueId id = idx.clique_id(tuple);
        if (id < 0)
            throw ParseError("line " + std::to_string(line_no) +
                             ": tuple is not a clique of the host graph");
        if (seen[static_cast<std::size_t>(id)])
            throw ParseError("line " + std::to_string(line_no) + ": duplicate clique entry");
        seen[static_cast<std::size_t>(id)] = true;
        w[id] = value;
    }
    return w;
}

void write_weighting_file(const std::string& path, const CliqueWeighting<Rational>& w) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    write_weighting(out, w);
    if (!out) throw IoError("write to '" + path + "' failed");
}

CliqueWeighting<Rational> read_weighting_file(const std::string& path, const CliqueIndex& idx) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    return read_weighting(in, idx);
}

} // namespace fracdec
