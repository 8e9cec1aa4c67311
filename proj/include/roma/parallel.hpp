#pragma once

namespace roma {

// Thread count for OpenMP regions. ROMA_SIM_THREADS caps it; returns 1
// when built without OpenMP.
int sim_thread_count();

}  // namespace roma
