# Physics module