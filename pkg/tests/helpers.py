"""Test helpers shared across modules."""

import random


class ScriptedRandom(random.Random):
    """random.Random that records primitive draws and can replay a script.

    Fallback draws are computed without routing through the overridden
    methods, so the recorded call list matches the caller's draws exactly.
    """

    def __init__(self, script=None):
        super().__init__(0)
        self.calls = []
        self.script = list(script or [])

    def _take(self, kind, fallback):
        self.calls.append(kind)
        if self.script:
            return self.script.pop(0)
        return fallback()

    def getrandbits(self, k):
        # Defining this keeps Random.__init_subclass__ on the getrandbits
        # path for _randbelow, so fallback draws never re-enter random().
        return random.Random.getrandbits(self, k)

    def random(self):
        return self._take("random", lambda: random.Random.random(self))

    def randint(self, a, b):
        return self._take("randint", lambda: a + self._randbelow(b - a + 1))

    def uniform(self, a, b):
        return self._take("uniform", lambda: a + (b - a) * random.Random.random(self))

    def choice(self, seq):
        return self._take("choice", lambda: seq[self._randbelow(len(seq))])

    def sample(self, population, k):
        self.calls.append("sample")
        if self.script:
            return self.script.pop(0)
        return random.Random.sample(self, list(population), k)

    def randrange(self, start, stop=None, step=1):
        self.calls.append("randrange")
        if self.script:
            return self.script.pop(0)
        if stop is None:
            return self._randbelow(start)
        return random.Random.randrange(self, start, stop, step)
