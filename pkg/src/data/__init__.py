# This directory contains the data access layer of the application
