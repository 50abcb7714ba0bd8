"""Skewrec Notify Module

This module defines the objects for notifying the caller about training
progress and finished work.
"""
from colorama import Fore, Style

from skewrec.result import EpochResult


class TrainNotify:
    """Train Notify Object.

    Base class that describes methods available to notify the progress of a
    run.  It is intended that other classes inherit from this base class and
    override the methods to implement specific functionality.
    """

    def __init__(self, result=None):
        self.result = result

    def start(self, message=None):
        """Notify Start.

        Called once before the first epoch.

        Keyword Arguments:
        self                   -- This object.
        message                -- Object that is used to give context to the
                                  start of training (the config).
                                  Default is None.

        Return Value:
        Nothing.
        """

    def update(self, result: EpochResult):
        """Notify Update.

        Called after every epoch with an EpochResult().
        """
        self.result = result

    def finish(self, message=None):
        """Notify Finish."""

    def info(self, message):
        """Free-form progress line (written files, metrics)."""

    def warn(self, message):
        """Free-form warning line."""

    def __str__(self):
        return str(self.result)


class TrainNotifyPrint(TrainNotify):
    """Train Notify Print Object.

    Prints progress to the standard output.
    """

    def __init__(self, result=None, verbose=False, every=10):
        """Create Train Notify Print Object.

        Keyword Arguments:
        self                   -- This object.
        result                 -- Last EpochResult() seen.
        verbose                -- Boolean indicating whether to print every
                                  epoch rather than every `every` epochs.
        every                  -- Print period in epochs.

        Return Value:
        Nothing.
        """
        super().__init__(result)
        self.verbose = verbose
        self.every = max(1, every)
        self.first = None

    def start(self, message=None):
        self.first = None
        print(Style.BRIGHT + Fore.GREEN + "[" +
              Fore.YELLOW + "*" +
              Fore.GREEN + "] Training with" +
              Fore.WHITE + f" {message}")

    def update(self, result: EpochResult):
        self.result = result
        if self.first is None:
            self.first = result
        if not (self.verbose or result.epoch % self.every == 0
                or result.epoch in (1, result.epochs)):
            return
        print(Style.BRIGHT + Fore.WHITE + "[" +
              Fore.GREEN + "+" +
              Fore.WHITE + "]" +
              Fore.GREEN + f" epoch {result.epoch}/{result.epochs}:" +
              Style.RESET_ALL +
              f" log-likelihood {result.loglik:.6f}  objective {result.objective:.6f}"
              f" [{round(result.elapsed * 1000)}ms]")

    def finish(self, message=None):
        if self.result is None:
            return
        change = self.result.loglik - self.first.loglik
        colour = Fore.GREEN if change >= 0 else Fore.RED
        print(Style.BRIGHT + Fore.GREEN + "[" +
              Fore.YELLOW + "*" +
              Fore.GREEN + "] Training finished after" +
              Fore.WHITE + f" {self.result.epochs} " +
              Fore.GREEN + "epochs, log-likelihood change" +
              colour + f" {change:+.6f}" + Style.RESET_ALL)

    def info(self, message):
        print(Style.BRIGHT + Fore.GREEN + "[" +
              Fore.YELLOW + "*" +
              Fore.GREEN + "]" +
              Style.RESET_ALL + f" {message}")

    def warn(self, message):
        print(Style.BRIGHT + Fore.WHITE + "[" +
              Fore.RED + "-" +
              Fore.WHITE + "]" +
              Fore.RED + f" {message}" + Style.RESET_ALL)
