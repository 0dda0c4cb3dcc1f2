#include "rcf/sha256.hpp"

#include <fstream>

#include "rcf/errors.hpp"

namespace rcf {

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    Sha256 h;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof(buf));
        h.update(buf, std::size_t(in.gcount()));
    }
    return h.hex_digest();
}

}  // namespace rcf
