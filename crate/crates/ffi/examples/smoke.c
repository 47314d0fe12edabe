/* Build against the static library, for example:
 *   cargo build -p montparnasse-ffi --release
 *   cc crates/ffi/examples/smoke.c -Icrates/ffi/include \
 *      target/release/libmontparnasse_ffi.a -lpthread -ldl -lm -o smoke
 */
#include <stdio.h>

#include "montparnasse.h"

int main(void) {
    MpTarget *target = NULL;
    if (mp_target_parse("(((..(((...)))..)))", &target) != MP_STATUS_OK) {
        char *msg = mp_last_error_message();
        fprintf(stderr, "parse failed: %s\n", msg ? msg : "?");
        mp_string_free(msg);
        return 1;
    }

    MpSolveOptions opts;
    mp_solve_options_default(&opts);
    opts.level = 2;
    opts.budget = 5000;
    opts.seed = 1;

    MpRunResult *result = NULL;
    MpStatus status = mp_solve(target, &opts, &result);
    if (status != MP_STATUS_OK) {
        char *msg = mp_last_error_message();
        fprintf(stderr, "solve failed (%d): %s\n", (int)status, msg ? msg : "?");
        mp_string_free(msg);
        mp_target_free(target);
        return 1;
    }

    char *sequence = mp_run_result_sequence(result);
    printf("%s bpd=%u evaluations=%llu\n", sequence, mp_run_result_best_bpd(result),
           (unsigned long long)mp_run_result_nevals(result));
    mp_string_free(sequence);
    mp_run_result_free(result);
    mp_target_free(target);
    return 0;
}
