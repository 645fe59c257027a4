#include "ntk/flops.hpp"

namespace ntk::flops {

Counters& counters() {
    static Counters instance;
    return instance;
}

} // namespace ntk::flops
