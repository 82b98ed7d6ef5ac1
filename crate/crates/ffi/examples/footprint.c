/* Minimal C consumer of the tinysweep ABI.
 *
 * Build (after `cargo build --workspace --release`):
 *   gcc -I crates/ffi/include examples-or-path/footprint.c \
 *       target/release/libtinysweep_ffi.a -lm -o footprint
 */

#include <assert.h>
#include <stdio.h>

#include "tinysweep.h"

int main(void) {
    printf("tinysweep %s\n", ts_version());

    TsModelSpec *spec = NULL;
    assert(ts_model_spec_new(128, 9, 6, &spec) == TS_OK);

    uint64_t macs = 0, params = 0, arena = 0;
    assert(ts_model_spec_macs(spec, &macs) == TS_OK);
    assert(ts_model_spec_parameter_count(spec, &params) == TS_OK);
    assert(ts_model_spec_arena_peak(spec, &arena) == TS_OK);
    printf("128x9 / 6 classes: %llu MACs, %llu parameters, %llu B arena\n",
           (unsigned long long)macs, (unsigned long long)params,
           (unsigned long long)arena);
    ts_model_spec_free(spec);

    /* Invalid shapes produce a status code plus a readable message. */
    TsModelSpec *bad = NULL;
    assert(ts_model_spec_new(4, 1, 2, &bad) == TS_INVALID_ARGUMENT);
    printf("expected failure: %s\n", ts_last_error_message());

    return 0;
}
