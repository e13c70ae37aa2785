"""Pure-Python event kernels: greedy FCFS (single or partitioned pool) and
egalitarian processor sharing, both with optional batch-level reneging.

The compiled kernels in ``_engine_cy`` implement the exact same event
mechanics in the exact same order; for a given trace the two produce
bit-identical outputs. Keep any change here in lockstep with the .pyx twin.

Shared conventions:

- all randomness is already realized in the trace; the kernels are pure;
- the event queue is keyed (time, sequence) with a unique per-push sequence
  number, so simultaneous events replay in push order;
- an arrival is processed before any queued event with an equal timestamp;
- stale queue entries (jobs already cancelled, deadlines of departed batches)
  are purged lazily without advancing the clock;
- time averages accumulate over [warmup, t_end]; the occupancy histogram
  additionally stops at the horizon so its window has a fixed width.
"""

from __future__ import annotations

import heapq
import math

import numpy as np

ENGINE_NAME = "py"

_EVT_DEPART = 0
_EVT_RENEGE = 1


def run_fcfs(arrival, sizes, offsets, service, job_batch, block_of_batch,
             block_cores, deadline, warmup, horizon, occ_cap):
    """Replay a trace under greedy FCFS on one or more dedicated core blocks.

    Each block runs head-of-line dispatch over its own FIFO: whenever one of
    its cores frees up, the longest-waiting queued job starts. ``deadline``
    is the batch reneging limit in ms (``inf`` disables impatience).
    Returns the metric accumulators described in ``_result``.
    """
    n_b = arrival.shape[0]
    arr = arrival.tolist()
    off = offsets.tolist()
    srv = service.tolist()
    jb = job_batch.tolist()
    bob = block_of_batch.tolist()
    n_jobs = len(srv)

    n_blocks = len(block_cores)
    free = [int(c) for c in block_cores]
    queued_live = [0] * n_blocks
    q_head = [-1] * n_blocks
    q_tail = [-1] * n_blocks
    nxt = [-1] * n_jobs
    # job states: 0 queued, 1 serving, 2 done, 3 cancelled
    state = bytearray(n_jobs)
    start_t = [0.0] * n_jobs
    remaining = [0] * n_b
    depart = [math.nan] * n_b
    reneged = bytearray(n_b)

    heap = []
    heappush = heapq.heappush
    heappop = heapq.heappop
    seq = 0

    t = 0.0
    n_sys = 0
    busy = 0
    area_jobs = 0.0
    area_busy = 0.0
    occ = [0.0] * occ_cap
    delivered = 0.0
    jobs_done = 0
    jsum = 0.0
    audit = 0
    impatient = deadline != math.inf

    def advance(tn):
        nonlocal t, area_jobs, area_busy
        if tn > t:
            lo = warmup if t < warmup else t
            if tn > lo:
                dt = tn - lo
                area_jobs += n_sys * dt
                area_busy += busy * dt
                hi = horizon if tn > horizon else tn
                if hi > lo:
                    occ[n_sys if n_sys < occ_cap else occ_cap - 1] += hi - lo
            t = tn

    def dispatch(blk):
        nonlocal seq, busy, audit
        while free[blk] > 0:
            j = q_head[blk]
            while j != -1 and state[j] != 0:
                j = nxt[j]
            if j == -1:
                q_head[blk] = -1
                q_tail[blk] = -1
                break
            q_head[blk] = nxt[j]
            if q_head[blk] == -1:
                q_tail[blk] = -1
            queued_live[blk] -= 1
            state[j] = 1
            start_t[j] = t
            free[blk] -= 1
            busy += 1
            heappush(heap, (t + srv[j], seq, _EVT_DEPART, j))
            seq += 1
        if free[blk] > 0 and queued_live[blk] > 0:
            audit += 1

    i = 0
    while True:
        while heap:
            top = heap[0]
            kind = top[2]
            if kind == _EVT_DEPART:
                if state[top[3]] == 1:
                    break
            elif remaining[top[3]] > 0:
                break
            heappop(heap)
        if i < n_b and (not heap or arr[i] <= heap[0][0]):
            advance(arr[i])
            blk = bob[i]
            k0 = off[i]
            k1 = off[i + 1]
            remaining[i] = k1 - k0
            for j in range(k0, k1):
                if q_tail[blk] == -1:
                    q_head[blk] = j
                else:
                    nxt[q_tail[blk]] = j
                q_tail[blk] = j
                nxt[j] = -1
            queued_live[blk] += k1 - k0
            n_sys += k1 - k0
            if impatient:
                heappush(heap, (t + deadline, seq, _EVT_RENEGE, i))
                seq += 1
            dispatch(blk)
            i += 1
        elif heap:
            tn, _, kind, payload = heappop(heap)
            advance(tn)
            if kind == _EVT_DEPART:
                j = payload
                b = jb[j]
                blk = bob[b]
                state[j] = 2
                free[blk] += 1
                busy -= 1
                n_sys -= 1
                delivered += srv[j]
                if arr[b] >= warmup:
                    jobs_done += 1
                    jsum += t - arr[b]
                remaining[b] -= 1
                if remaining[b] == 0:
                    depart[b] = t
                dispatch(blk)
            else:
                b = payload
                blk = bob[b]
                freed = 0
                removed = 0
                for j in range(off[b], off[b + 1]):
                    s = state[j]
                    if s == 0:
                        state[j] = 3
                        queued_live[blk] -= 1
                        removed += 1
                    elif s == 1:
                        state[j] = 3
                        delivered += t - start_t[j]
                        freed += 1
                        removed += 1
                remaining[b] = 0
                reneged[b] = 1
                depart[b] = t
                free[blk] += freed
                busy -= freed
                n_sys -= removed
                dispatch(blk)
        else:
            break
    advance(horizon if horizon > t else t)

    return _result(depart, reneged, t, area_jobs, area_busy, occ, delivered,
                   jobs_done, jsum, audit, 0.0)


def run_ps(arrival, sizes, offsets, service, job_batch, cores, deadline,
           warmup, horizon, occ_cap):
    """Replay a trace under egalitarian processor sharing.

    The whole pool's capacity (``cores`` work units per ms) is split equally
    over the jobs present, with no per-job cap — ``C`` cores with one job in
    the system drain it at rate ``C``. Implemented on a virtual clock ``V``
    with dV/dt = cores / N: a job arriving with requirement ``w`` departs
    when ``V`` reaches its entry value plus ``w``, so no residual-work
    rescaling is needed. ``fairness_error`` is the largest gap between the
    integrated virtual clock and a departing job's exact virtual deadline.
    """
    n_b = arrival.shape[0]
    arr = arrival.tolist()
    off = offsets.tolist()
    srv = service.tolist()
    jb = job_batch.tolist()
    n_jobs = len(srv)

    cap = float(cores)
    # job states: 0 not arrived, 1 resident, 2 done, 3 cancelled
    state = bytearray(n_jobs)
    v_enter = [0.0] * n_jobs
    remaining = [0] * n_b
    depart = [math.nan] * n_b
    reneged = bytearray(n_b)

    dep_heap = []
    ddl_heap = []
    heappush = heapq.heappush
    heappop = heapq.heappop
    seq = 0

    t = 0.0
    vclock = 0.0
    n_res = 0
    area_jobs = 0.0
    area_busy = 0.0
    occ = [0.0] * occ_cap
    delivered = 0.0
    jobs_done = 0
    jsum = 0.0
    fairness = 0.0
    impatient = deadline != math.inf
    inf = math.inf

    def advance(tn):
        nonlocal t, vclock, area_jobs, area_busy
        if tn > t:
            if n_res > 0:
                vclock += (tn - t) * cap / n_res
            lo = warmup if t < warmup else t
            if tn > lo:
                dt = tn - lo
                area_jobs += n_res * dt
                if n_res > 0:
                    area_busy += cap * dt
                hi = horizon if tn > horizon else tn
                if hi > lo:
                    occ[n_res if n_res < occ_cap else occ_cap - 1] += hi - lo
            t = tn

    i = 0
    while True:
        while dep_heap and state[dep_heap[0][2]] != 1:
            heappop(dep_heap)
        while ddl_heap and remaining[ddl_heap[0][2]] == 0:
            heappop(ddl_heap)
        t_arr = arr[i] if i < n_b else inf
        t_dep = t + (dep_heap[0][0] - vclock) * n_res / cap if dep_heap else inf
        t_ddl = ddl_heap[0][0] if ddl_heap else inf
        if t_arr <= t_dep and t_arr <= t_ddl:
            if t_arr == inf:
                break
            advance(t_arr)
            k0 = off[i]
            k1 = off[i + 1]
            remaining[i] = k1 - k0
            for j in range(k0, k1):
                state[j] = 1
                v_enter[j] = vclock
                heappush(dep_heap, (vclock + srv[j], seq, j))
                seq += 1
            n_res += k1 - k0
            if impatient:
                heappush(ddl_heap, (t + deadline, seq, i))
                seq += 1
            i += 1
        elif t_dep <= t_ddl:
            advance(t_dep)
            v_dep, _, j = heappop(dep_heap)
            err = vclock - v_dep
            if err < 0.0:
                err = -err
            if err > fairness:
                fairness = err
            vclock = v_dep
            state[j] = 2
            n_res -= 1
            b = jb[j]
            delivered += srv[j]
            if arr[b] >= warmup:
                jobs_done += 1
                jsum += t - arr[b]
            remaining[b] -= 1
            if remaining[b] == 0:
                depart[b] = t
        else:
            advance(t_ddl)
            _, _, b = heappop(ddl_heap)
            for j in range(off[b], off[b + 1]):
                if state[j] == 1:
                    state[j] = 3
                    delivered += vclock - v_enter[j]
                    n_res -= 1
            remaining[b] = 0
            reneged[b] = 1
            depart[b] = t
    advance(horizon if horizon > t else t)

    return _result(depart, reneged, t, area_jobs, area_busy, occ, delivered,
                   jobs_done, jsum, 0, fairness)


def _result(depart, reneged, t_end, area_jobs, area_busy, occ, delivered,
            jobs_done, jsum, audit, fairness):
    return {
        "depart": np.asarray(depart, dtype=np.float64),
        "reneged": np.frombuffer(bytes(reneged), dtype=np.uint8).astype(bool),
        "t_end": t_end,
        "area_jobs": area_jobs,
        "area_busy": area_busy,
        "occupancy_time": np.asarray(occ, dtype=np.float64),
        "delivered_work": delivered,
        "jobs_completed": jobs_done,
        "job_sojourn_sum": jsum,
        "audit_violations": audit,
        "fairness_error": fairness,
    }
