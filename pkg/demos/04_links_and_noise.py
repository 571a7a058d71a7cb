# Radio link budget and rotor noise, the two environment observables.
import numpy as np

from quadtrack import env

links = env.default_links()
d = np.array([1, 10, 50, 100, 200, 250, 300, 500, 1000.0])
print("  dist " + "".join("%14s" % n for n in links))
for di in d:
    cells = []
    for link in links.values():
        r = env.rssi_at(link, di)
        cells.append("%7.1f %-6s" % (r, env.link_state(link, r).value[:6]))
    print("%6.0f " % di + "".join(cells))
for name, link in links.items():
    print("%-12s n=%.2f, lost beyond %.0f m" % (name, link.path_loss_exponent, link.loss_distance))

model = env.AcousticModel()
print("\ntones at %.0f rpm:" % model.rpm)
for f, level in env.tone_set(model):
    print("  %7.1f Hz  %+5.1f dB" % (f, level))

# microphone on the ground, vehicle hovering at 5 m
for x in (0, 2, 5, 10):
    r = np.hypot(x, 5.0)
    print("mic at %2d m: %.1f dB" % (x, env.spl_at(model, r)))

t, x = env.synthesize(model, 2.0)
mag = np.abs(np.fft.rfft(x))
freqs = np.fft.rfftfreq(len(x), t[1] - t[0])
top = np.argsort(mag)[-5:][::-1]
print("strongest FFT bins:", ", ".join("%.0f Hz" % freqs[i] for i in top))
