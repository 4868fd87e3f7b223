"""Exploration: full branch-2 script for the first-order-PDE problem."""
import time
from fractions import Fraction
from jetcartan.symbols import base, groupjet, MultiIndex as MI, EMPTY
from jetcartan.frames import Problem, FrameState
from jetcartan import pde1

t0 = time.time()
sysd = pde1.determining_system()
pb = Problem(space=pde1.space(max_order=10), system=sysd, deps=pde1.DEPS,
             constraints=pde1.branch2_stage2_constraints(), symbolic_solves=False)
st = FrameState(problem=pb)
G = groupjet
for comp in ('x', 'y', 'u', 'p'):
    st = st.normalize(comp, EMPTY, 0, G(comp))
st = st.normalize('q', EMPTY, 0, G('q'))
st = st.normalize('q', MI.of('x'), 0, G('p', MI.of('y')))
st = st.normalize('q', MI.of('y'), 0, G('q', MI.of('y')))
st = st.normalize('q', MI.of('u'), 0, G('q', MI.of('u')))
st = st.normalize('q', MI.of('p'), 0, G('x', MI.of('y')))
second = {('x','x'): G('p', MI.of('x','y')), ('x','y'): G('p', MI.of('y','y')),
          ('x','u'): G('p', MI.of('u','y')), ('x','p'): G('x', MI.of('x','y')),
          ('y','y'): G('q', MI.of('y','y')), ('y','u'): G('q', MI.of('u','y')),
          ('y','p'): G('x', MI.of('y','y')), ('u','u'): G('q', MI.of('u','u')),
          ('u','p'): G('x', MI.of('u','y'))}
for pair, sf in second.items():
    st = st.normalize('q', MI.of(*pair), 0, sf)
st = st.normalize('q', MI.of('p','p'), 1, G('u', MI.of('u')))
st = st.normalize('q', MI.of('p','p','p'), 0, G('x', MI.of('u')))
st = st.normalize('q', MI.of('p','p','p','p'), 0, G('y', MI.of('u')))
stage1_tail = [
    (('x','p','p'), G('x', MI.of('x','x'))),
    (('y','p','p'), G('y', MI.of('y','y'))),
    (('u','p','p'), G('u', MI.of('u','u'))),
    (('x','p','p','p'), G('y', MI.of('x','x'))),
    (('y','p','p','p'), G('y', MI.of('x','y'))),
    (('u','p','p','p'), G('x', MI.of('u','u'))),
    (('x','p','p','p','p'), G('y', MI.of('u','x'))),
    (('y','p','p','p','p'), G('y', MI.of('u','y'))),
    (('u','p','p','p','p'), G('y', MI.of('u','u'))),
]
for tail, sf in stage1_tail:
    st = st.normalize('q', MI.of(*tail), 0, sf)
    print('stage1 normalized q[%s] -> %s  (%.1fs)' % (','.join(tail), sf, time.time()-t0), flush=True)

print('STAGE 1 summary:')
print('  free order 1:', [str(s) for s in st.free_parameters(1)])
print('  free order 2 (r2):', [str(s) for s in st.free_parameters(2)])
for name, f in zip(('x','y','u','p'), st.horizontal_structure()):
    print('  dw^%s =' % name, f)
print('elapsed %.1fs' % (time.time()-t0), flush=True)

stage2 = [
    # third-order heads
    (('x','x','x'), G('p', MI.of('x','x','y'))),
    (('x','x','y'), G('p', MI.of('x','y','y'))),
    (('x','x','u'), G('p', MI.of('u','x','y'))),
    (('x','y','y'), G('p', MI.of('y','y','y'))),
    (('x','y','u'), G('p', MI.of('u','y','y'))),
    (('x','u','u'), G('p', MI.of('u','u','y'))),
    (('y','y','y'), G('q', MI.of('y','y','y'))),
    (('y','y','u'), G('q', MI.of('u','y','y'))),
    (('y','u','u'), G('q', MI.of('u','u','y'))),
    (('u','u','u'), G('q', MI.of('u','u','u'))),
    (('x','x','p'), G('x', MI.of('x','x','y'))),
    (('x','y','p'), G('x', MI.of('x','y','y'))),
    (('x','u','p'), G('x', MI.of('u','x','y'))),
    (('y','y','p'), G('x', MI.of('y','y','y'))),
    (('y','u','p'), G('x', MI.of('u','y','y'))),
    (('u','u','p'), G('x', MI.of('u','u','y'))),
    # pp-rows
    (('x','x','p','p'), G('x', MI.of('x','x','x'))),
    (('x','u','p','p'), G('x', MI.of('u','x','x'))),
    (('x','y','p','p'), G('y', MI.of('x','y','y'))),
    (('y','y','p','p'), G('y', MI.of('y','y','y'))),
    (('y','u','p','p'), G('y', MI.of('u','y','y'))),
    (('u','u','p','p'), G('u', MI.of('u','u','u'))),
    # ppp-rows
    (('x','x','p','p','p'), G('y', MI.of('x','x','x'))),
    (('x','y','p','p','p'), G('y', MI.of('x','x','y'))),
    (('x','u','p','p','p'), G('x', MI.of('u','u','x'))),
    (('u','u','p','p','p'), G('x', MI.of('u','u','u'))),
    # pppp-rows
    (('x','x','p','p','p','p'), G('y', MI.of('u','x','x'))),
    (('x','y','p','p','p','p'), G('y', MI.of('u','x','y'))),
    (('x','u','p','p','p','p'), G('y', MI.of('u','u','x'))),
    (('y','u','p','p','p','p'), G('y', MI.of('u','u','y'))),
    (('u','u','p','p','p','p'), G('y', MI.of('u','u','u'))),
]
for tail, sf in stage2:
    try:
        st = st.normalize('q', MI.of(*tail), 0, sf)
        print('stage2 normalized q[%s] -> %s  (%.1fs)' % (','.join(tail), sf, time.time()-t0), flush=True)
    except Exception as exc:
        print('stage2 FAILED q[%s] -> %s: %s' % (','.join(tail), sf, exc), flush=True)
        row = st.row_form('q', MI.of(*tail))
        mc = [(str(g), str(c)) for gens, c in row.terms.items() for g in gens if g.kind.name == 'MC']
        print('   row mc:', mc, flush=True)

print('STAGE 2 summary:')
print('  free order 2:', [str(s) for s in st.free_parameters(2)])
print('  free order 3 (r3):', [str(s) for s in st.free_parameters(3)])
print('elapsed %.1fs' % (time.time()-t0), flush=True)
for comp, idx in (('p', MI.of('u')), ('p', MI.of('x')), ('x', MI.of('x')), ('y', MI.of('x')), ('y', MI.of('y'))):
    print('dmu^%s_%s =' % (comp, idx), st.dmu_structure(comp, idx))
    print()
print('total %.1fs' % (time.time()-t0))
