#include "dnr/admittance.hpp"

#include "dnr/errors.hpp"

namespace dnr {

BlockAdmittanceMatrix BlockAdmittanceMatrix::operator-(const BlockAdmittanceMatrix& o) const {
    if (n_ != o.n_)
        throw StructuralError("block admittance dimension mismatch: " + std::to_string(n_) +
                              " vs " + std::to_string(o.n_) + " nodes");
    BlockAdmittanceMatrix out(n_);
    out.data_ = data_ - o.data_;
    return out;
}

} // namespace dnr
