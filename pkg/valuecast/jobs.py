"""Run a function over many independent keys, serially or in a process pool"""

import logging
import contextlib
import multiprocessing as mp
from tqdm import tqdm
from .settings import config

logger = logging.getLogger(__name__.split(".")[0])


# --- helper functions for multiprocessing --


def _initialize_worker(func, context, suppress_errors):
    """
    Initialize the process for multiprocessing.
    Saves the unpickled read-only context to the current process.
    """
    process = mp.current_process()
    process.func = func
    process.context = context
    process.suppress_errors = suppress_errors


def _call_job1(key):
    process = mp.current_process()
    return _job1(process.func, process.context, key, process.suppress_errors)


def _job1(func, context, key, suppress_errors):
    """
    :return: (True, result) on success, (False, (key, error_message)) on a suppressed error
    """
    try:
        result = func(context, key)
    except (KeyboardInterrupt, SystemExit, Exception) as error:
        if not suppress_errors or not isinstance(error, Exception):
            raise
        error_message = "{exception}{msg}".format(
            exception=error.__class__.__name__,
            msg=": " + str(error) if str(error) else "",
        )
        logger.error(f"Error in job {key} - {error_message}")
        return False, (key, error_message)
    return True, result


def map_jobs(
    func,
    keys,
    context=None,
    *,
    processes=None,
    display_progress=None,
    suppress_errors=False,
    desc=None,
):
    """
    ``map_jobs(func, keys, context)`` calls ``func(context, key)`` for every key.

    :param func: a module-level (picklable) function of (context, key)
    :param keys: a sequence of job keys
    :param context: read-only data shared by all jobs, shipped once per worker process
    :param processes: number of processes to use. None uses config["processes"];
        set the config value to None to use all cores
    :param display_progress: if True, report progress_bar. None uses config["display.progress"]
    :param suppress_errors: if True, do not terminate execution on a failing job
    :param desc: progress bar label
    :return: a tuple (results, error_list). results are in key order, with None in the
        place of failed jobs; error_list holds (key, message) pairs of suppressed errors
    """
    keys = list(keys)
    if processes is None:
        processes = config["processes"]
    if display_progress is None:
        display_progress = config["display.progress"]
    results = []
    error_list = []
    if not keys:
        return results, error_list

    processes = min(_ for _ in (processes, len(keys), mp.cpu_count()) if _)
    logger.debug("Running %d jobs on %d processes" % (len(keys), processes))

    if processes == 1:
        for key in tqdm(keys, desc=desc) if display_progress else keys:
            ok, value = _job1(func, context, key, suppress_errors)
            results.append(value if ok else None)
            if not ok:
                error_list.append(value)
    else:
        with mp.Pool(
            processes, _initialize_worker, (func, context, suppress_errors)
        ) as pool, (
            tqdm(desc=desc or "Processes: ", total=len(keys))
            if display_progress
            else contextlib.nullcontext()
        ) as progress_bar:
            for ok, value in pool.imap(_call_job1, keys, chunksize=1):
                results.append(value if ok else None)
                if not ok:
                    error_list.append(value)
                if display_progress:
                    progress_bar.update()
    return results, error_list
