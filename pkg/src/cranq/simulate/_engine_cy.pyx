# cython: language_level=3
# cython: boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled twin of the pure-Python event kernels in ``_engine_py``.

Same data structures, same event ordering, same floating-point expression
shapes; the build disables FP contraction, so for a given trace the two
engines return bit-identical results. Keep any change here in lockstep with
the pure-Python module.
"""

import numpy as np

cimport numpy as cnp
from cpython.mem cimport PyMem_Free, PyMem_Malloc
from libc.math cimport INFINITY, NAN

cnp.import_array()

ENGINE_NAME = "cy"

ctypedef cnp.float64_t f8
ctypedef cnp.int64_t i8


cdef class _Heap:
    """Fixed-capacity binary min-heap on (key, seq); seq is unique per push,
    so the order is total and pops replay in exactly heapq's order."""

    cdef f8* key
    cdef i8* seq
    cdef i8* pay
    cdef int* kind
    cdef Py_ssize_t n

    def __cinit__(self, Py_ssize_t capacity):
        if capacity < 1:
            capacity = 1
        self.key = <f8*> PyMem_Malloc(capacity * sizeof(f8))
        self.seq = <i8*> PyMem_Malloc(capacity * sizeof(i8))
        self.pay = <i8*> PyMem_Malloc(capacity * sizeof(i8))
        self.kind = <int*> PyMem_Malloc(capacity * sizeof(int))
        if self.key == NULL or self.seq == NULL or self.pay == NULL \
                or self.kind == NULL:
            raise MemoryError("event heap allocation failed")
        self.n = 0

    def __dealloc__(self):
        PyMem_Free(self.key)
        PyMem_Free(self.seq)
        PyMem_Free(self.pay)
        PyMem_Free(self.kind)

    cdef inline bint _less(self, Py_ssize_t i, Py_ssize_t j):
        if self.key[i] != self.key[j]:
            return self.key[i] < self.key[j]
        return self.seq[i] < self.seq[j]

    cdef inline void _swap(self, Py_ssize_t i, Py_ssize_t j):
        cdef f8 k = self.key[i]
        cdef i8 s = self.seq[i]
        cdef i8 p = self.pay[i]
        cdef int d = self.kind[i]
        self.key[i] = self.key[j]
        self.seq[i] = self.seq[j]
        self.pay[i] = self.pay[j]
        self.kind[i] = self.kind[j]
        self.key[j] = k
        self.seq[j] = s
        self.pay[j] = p
        self.kind[j] = d

    cdef inline void push(self, f8 k, i8 s, int kd, i8 p):
        cdef Py_ssize_t c = self.n
        cdef Py_ssize_t parent
        self.key[c] = k
        self.seq[c] = s
        self.kind[c] = kd
        self.pay[c] = p
        self.n += 1
        while c > 0:
            parent = (c - 1) >> 1
            if self._less(c, parent):
                self._swap(c, parent)
                c = parent
            else:
                break

    cdef inline void pop(self):
        # The caller reads slot 0 before popping.
        cdef Py_ssize_t c = 0
        cdef Py_ssize_t l, r, m
        self.n -= 1
        if self.n == 0:
            return
        self._swap(0, self.n)
        while True:
            l = 2 * c + 1
            r = l + 1
            m = c
            if l < self.n and self._less(l, m):
                m = l
            if r < self.n and self._less(r, m):
                m = r
            if m == c:
                break
            self._swap(c, m)
            c = m


cdef class _Fcfs:
    cdef f8[::1] arr
    cdef i8[::1] off
    cdef f8[::1] srv
    cdef i8[::1] jb
    cdef i8[::1] bob
    cdef i8[::1] free
    cdef i8[::1] queued_live
    cdef i8[::1] q_head
    cdef i8[::1] q_tail
    cdef i8[::1] nxt
    cdef unsigned char[::1] state
    cdef f8[::1] start_t
    cdef i8[::1] remaining
    cdef f8[::1] depart
    cdef unsigned char[::1] ren
    cdef f8[::1] occ
    cdef _Heap heap
    cdef double deadline, warmup, horizon
    cdef double t, area_jobs, area_busy, delivered, jsum
    cdef i8 seq, n_sys, busy, jobs_done, audit
    cdef Py_ssize_t occ_cap
    cdef bint impatient

    cdef inline void advance(self, double tn):
        cdef double lo, dt, hi
        cdef Py_ssize_t idx
        if tn > self.t:
            lo = self.warmup if self.t < self.warmup else self.t
            if tn > lo:
                dt = tn - lo
                self.area_jobs += self.n_sys * dt
                self.area_busy += self.busy * dt
                hi = self.horizon if tn > self.horizon else tn
                if hi > lo:
                    idx = self.n_sys if self.n_sys < self.occ_cap \
                        else self.occ_cap - 1
                    self.occ[idx] += hi - lo
            self.t = tn

    cdef inline void dispatch(self, Py_ssize_t blk):
        cdef Py_ssize_t j
        while self.free[blk] > 0:
            j = self.q_head[blk]
            while j != -1 and self.state[j] != 0:
                j = self.nxt[j]
            if j == -1:
                self.q_head[blk] = -1
                self.q_tail[blk] = -1
                break
            self.q_head[blk] = self.nxt[j]
            if self.q_head[blk] == -1:
                self.q_tail[blk] = -1
            self.queued_live[blk] -= 1
            self.state[j] = 1
            self.start_t[j] = self.t
            self.free[blk] -= 1
            self.busy += 1
            self.heap.push(self.t + self.srv[j], self.seq, 0, j)
            self.seq += 1
        if self.free[blk] > 0 and self.queued_live[blk] > 0:
            self.audit += 1

    cdef void run(self):
        cdef Py_ssize_t n_b = self.arr.shape[0]
        cdef Py_ssize_t i = 0
        cdef Py_ssize_t j, b, blk, k0, k1
        cdef i8 freed, removed
        cdef double tn
        cdef int kind
        cdef unsigned char s
        cdef _Heap h = self.heap
        while True:
            while h.n > 0:
                kind = h.kind[0]
                if kind == 0:
                    if self.state[h.pay[0]] == 1:
                        break
                elif self.remaining[h.pay[0]] > 0:
                    break
                h.pop()
            if i < n_b and (h.n == 0 or self.arr[i] <= h.key[0]):
                self.advance(self.arr[i])
                blk = self.bob[i]
                k0 = self.off[i]
                k1 = self.off[i + 1]
                self.remaining[i] = k1 - k0
                for j in range(k0, k1):
                    if self.q_tail[blk] == -1:
                        self.q_head[blk] = j
                    else:
                        self.nxt[self.q_tail[blk]] = j
                    self.q_tail[blk] = j
                    self.nxt[j] = -1
                self.queued_live[blk] += k1 - k0
                self.n_sys += k1 - k0
                if self.impatient:
                    h.push(self.t + self.deadline, self.seq, 1, i)
                    self.seq += 1
                self.dispatch(blk)
                i += 1
            elif h.n > 0:
                tn = h.key[0]
                kind = h.kind[0]
                b = h.pay[0]
                h.pop()
                self.advance(tn)
                if kind == 0:
                    j = b
                    b = self.jb[j]
                    blk = self.bob[b]
                    self.state[j] = 2
                    self.free[blk] += 1
                    self.busy -= 1
                    self.n_sys -= 1
                    self.delivered += self.srv[j]
                    if self.arr[b] >= self.warmup:
                        self.jobs_done += 1
                        self.jsum += self.t - self.arr[b]
                    self.remaining[b] -= 1
                    if self.remaining[b] == 0:
                        self.depart[b] = self.t
                    self.dispatch(blk)
                else:
                    blk = self.bob[b]
                    freed = 0
                    removed = 0
                    for j in range(self.off[b], self.off[b + 1]):
                        s = self.state[j]
                        if s == 0:
                            self.state[j] = 3
                            self.queued_live[blk] -= 1
                            removed += 1
                        elif s == 1:
                            self.state[j] = 3
                            self.delivered += self.t - self.start_t[j]
                            freed += 1
                            removed += 1
                    self.remaining[b] = 0
                    self.ren[b] = 1
                    self.depart[b] = self.t
                    self.free[blk] += freed
                    self.busy -= freed
                    self.n_sys -= removed
                    self.dispatch(blk)
            else:
                break
        self.advance(self.horizon if self.horizon > self.t else self.t)


cdef class _Ps:
    cdef f8[::1] arr
    cdef i8[::1] off
    cdef f8[::1] srv
    cdef i8[::1] jb
    cdef unsigned char[::1] state
    cdef f8[::1] v_enter
    cdef i8[::1] remaining
    cdef f8[::1] depart
    cdef unsigned char[::1] ren
    cdef f8[::1] occ
    cdef _Heap dep
    cdef _Heap ddl
    cdef double cap, deadline, warmup, horizon
    cdef double t, vclock, area_jobs, area_busy, delivered, jsum, fairness
    cdef i8 seq, n_res, jobs_done
    cdef Py_ssize_t occ_cap
    cdef bint impatient

    cdef inline void advance(self, double tn):
        cdef double lo, dt, hi
        cdef Py_ssize_t idx
        if tn > self.t:
            if self.n_res > 0:
                self.vclock += (tn - self.t) * self.cap / self.n_res
            lo = self.warmup if self.t < self.warmup else self.t
            if tn > lo:
                dt = tn - lo
                self.area_jobs += self.n_res * dt
                if self.n_res > 0:
                    self.area_busy += self.cap * dt
                hi = self.horizon if tn > self.horizon else tn
                if hi > lo:
                    idx = self.n_res if self.n_res < self.occ_cap \
                        else self.occ_cap - 1
                    self.occ[idx] += hi - lo
            self.t = tn

    cdef void run(self):
        cdef Py_ssize_t n_b = self.arr.shape[0]
        cdef Py_ssize_t i = 0
        cdef Py_ssize_t j, b, k0, k1
        cdef double t_arr, t_dep, t_ddl, v_dep, err
        cdef _Heap dep = self.dep
        cdef _Heap ddl = self.ddl
        while True:
            while dep.n > 0 and self.state[dep.pay[0]] != 1:
                dep.pop()
            while ddl.n > 0 and self.remaining[ddl.pay[0]] == 0:
                ddl.pop()
            t_arr = self.arr[i] if i < n_b else INFINITY
            t_dep = self.t + (dep.key[0] - self.vclock) * self.n_res / self.cap \
                if dep.n > 0 else INFINITY
            t_ddl = ddl.key[0] if ddl.n > 0 else INFINITY
            if t_arr <= t_dep and t_arr <= t_ddl:
                if t_arr == INFINITY:
                    break
                self.advance(t_arr)
                k0 = self.off[i]
                k1 = self.off[i + 1]
                self.remaining[i] = k1 - k0
                for j in range(k0, k1):
                    self.state[j] = 1
                    self.v_enter[j] = self.vclock
                    dep.push(self.vclock + self.srv[j], self.seq, 0, j)
                    self.seq += 1
                self.n_res += k1 - k0
                if self.impatient:
                    ddl.push(self.t + self.deadline, self.seq, 0, i)
                    self.seq += 1
                i += 1
            elif t_dep <= t_ddl:
                self.advance(t_dep)
                v_dep = dep.key[0]
                j = dep.pay[0]
                dep.pop()
                err = self.vclock - v_dep
                if err < 0.0:
                    err = -err
                if err > self.fairness:
                    self.fairness = err
                self.vclock = v_dep
                self.state[j] = 2
                self.n_res -= 1
                b = self.jb[j]
                self.delivered += self.srv[j]
                if self.arr[b] >= self.warmup:
                    self.jobs_done += 1
                    self.jsum += self.t - self.arr[b]
                self.remaining[b] -= 1
                if self.remaining[b] == 0:
                    self.depart[b] = self.t
            else:
                t_ddl = ddl.key[0]
                b = ddl.pay[0]
                ddl.pop()
                self.advance(t_ddl)
                for j in range(self.off[b], self.off[b + 1]):
                    if self.state[j] == 1:
                        self.state[j] = 3
                        self.delivered += self.vclock - self.v_enter[j]
                        self.n_res -= 1
                self.remaining[b] = 0
                self.ren[b] = 1
                self.depart[b] = self.t
        self.advance(self.horizon if self.horizon > self.t else self.t)


def run_fcfs(arrival, sizes, offsets, service, job_batch, block_of_batch,
             block_cores, double deadline, double warmup, double horizon,
             Py_ssize_t occ_cap):
    """Compiled twin of ``_engine_py.run_fcfs``; same contract and output."""
    cdef Py_ssize_t n_b = arrival.shape[0]
    cdef Py_ssize_t n_jobs = service.shape[0]
    cdef _Fcfs k = _Fcfs()
    k.arr = np.ascontiguousarray(arrival, dtype=np.float64)
    k.off = np.ascontiguousarray(offsets, dtype=np.int64)
    k.srv = np.ascontiguousarray(service, dtype=np.float64)
    k.jb = np.ascontiguousarray(job_batch, dtype=np.int64)
    k.bob = np.ascontiguousarray(block_of_batch, dtype=np.int64)
    k.free = np.ascontiguousarray(block_cores, dtype=np.int64).copy()
    cdef Py_ssize_t n_blocks = k.free.shape[0]
    k.queued_live = np.zeros(n_blocks, dtype=np.int64)
    k.q_head = np.full(n_blocks, -1, dtype=np.int64)
    k.q_tail = np.full(n_blocks, -1, dtype=np.int64)
    k.nxt = np.full(n_jobs, -1, dtype=np.int64)
    k.state = np.zeros(n_jobs, dtype=np.uint8)
    k.start_t = np.zeros(n_jobs, dtype=np.float64)
    k.remaining = np.zeros(n_b, dtype=np.int64)
    k.depart = np.full(n_b, NAN, dtype=np.float64)
    k.ren = np.zeros(n_b, dtype=np.uint8)
    k.occ = np.zeros(occ_cap, dtype=np.float64)
    k.deadline = deadline
    k.warmup = warmup
    k.horizon = horizon
    k.occ_cap = occ_cap
    k.impatient = deadline != INFINITY
    k.heap = _Heap(n_jobs + (n_b if k.impatient else 0) + 1)
    k.run()
    return _result(k.depart, k.ren, k.t, k.area_jobs, k.area_busy, k.occ,
                   k.delivered, k.jobs_done, k.jsum, k.audit, 0.0)


def run_ps(arrival, sizes, offsets, service, job_batch, cores,
           double deadline, double warmup, double horizon,
           Py_ssize_t occ_cap):
    """Compiled twin of ``_engine_py.run_ps``; same contract and output."""
    cdef Py_ssize_t n_b = arrival.shape[0]
    cdef Py_ssize_t n_jobs = service.shape[0]
    cdef _Ps k = _Ps()
    k.arr = np.ascontiguousarray(arrival, dtype=np.float64)
    k.off = np.ascontiguousarray(offsets, dtype=np.int64)
    k.srv = np.ascontiguousarray(service, dtype=np.float64)
    k.jb = np.ascontiguousarray(job_batch, dtype=np.int64)
    k.state = np.zeros(n_jobs, dtype=np.uint8)
    k.v_enter = np.zeros(n_jobs, dtype=np.float64)
    k.remaining = np.zeros(n_b, dtype=np.int64)
    k.depart = np.full(n_b, NAN, dtype=np.float64)
    k.ren = np.zeros(n_b, dtype=np.uint8)
    k.occ = np.zeros(occ_cap, dtype=np.float64)
    k.cap = float(cores)
    k.deadline = deadline
    k.warmup = warmup
    k.horizon = horizon
    k.occ_cap = occ_cap
    k.impatient = deadline != INFINITY
    k.dep = _Heap(n_jobs + 1)
    k.ddl = _Heap(n_b + 1)
    k.run()
    return _result(k.depart, k.ren, k.t, k.area_jobs, k.area_busy, k.occ,
                   k.delivered, k.jobs_done, k.jsum, 0, k.fairness)


def _result(depart, reneged, double t_end, double area_jobs, double area_busy,
            occ, double delivered, i8 jobs_done, double jsum, i8 audit,
            double fairness):
    return {
        "depart": np.asarray(depart),
        "reneged": np.asarray(reneged).astype(bool),
        "t_end": t_end,
        "area_jobs": area_jobs,
        "area_busy": area_busy,
        "occupancy_time": np.asarray(occ),
        "delivered_work": delivered,
        "jobs_completed": int(jobs_done),
        "job_sojourn_sum": jsum,
        "audit_violations": int(audit),
        "fairness_error": fairness,
    }
